// Copyright 2026 The bimath Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.h"

#include <algorithm>
#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "bimath/arena.h"
#include "bimath/contamination.h"
#include "bimath/curation.h"
#include "bimath/curation_server.h"
#include "bimath/errors.h"
#include "bimath/eval_harness.h"
#include "bimath/msi_pipeline.h"
#include "bimath/report.h"
#include "bimath/ust_datagen.h"

namespace bimath {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

// Servers started by `curate serve`, stopped on SIGINT / SIGTERM.
std::mutex g_servers_mu;
std::vector<CurationServer*> g_servers;

extern "C" void HandleStopSignal(int) {
  // httplib's stop() only flips flags and shuts the socket down.
  for (auto* s : g_servers) s->Stop();
}

void WriteFile(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
}

struct Globals {
  std::optional<std::uint64_t> seed;
  bool verbose = false;
  std::string prompts_dir;
};

struct BackendFlags {
  std::string spec;
  std::string model = "default";
  std::string auth_env = "BIMATH_API_KEY";
  std::string reward_endpoint;
  std::string reward_model;
  int timeout = 120;
  int concurrency = 4;
  int retries = 3;
  int backoff_ms = 200;
  std::string cache_dir;
  bool no_cache = false;

  void Register(CLI::App* cmd, const std::string& name, bool required) {
    auto* opt = cmd->add_option("--" + name, spec,
                                "Backend: mock:FIXTURE.json or "
                                "openai:http://host:port/v1");
    if (required) opt->required();
    cmd->add_option("--model", model, "Model id sent to the backend")
        ->capture_default_str();
    cmd->add_option("--auth-env", auth_env,
                    "Environment variable holding the bearer token")
        ->capture_default_str();
    cmd->add_option("--reward-endpoint", reward_endpoint,
                    "Reward scoring URL (openai backends)");
    cmd->add_option("--reward-model", reward_model, "Reward model id");
    cmd->add_option("--timeout", timeout, "HTTP timeout in seconds")
        ->capture_default_str();
    cmd->add_option("--concurrency", concurrency, "Requests in flight")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd->add_option("--retries", retries, "Retries on transport errors")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--backoff-ms", backoff_ms, "Initial retry backoff")
        ->capture_default_str();
    cmd->add_option("--cache", cache_dir, "Persist responses here");
    cmd->add_flag("--no-cache", no_cache, "Disable the response cache");
  }

  std::unique_ptr<Gateway> Make() const {
    BackendConfig config = BackendConfig::FromSpec(spec);
    config.model = model;
    config.auth_env = auth_env;
    config.reward_endpoint = reward_endpoint;
    config.reward_model = reward_model;
    config.timeout_seconds = timeout;
    GatewayOptions options;
    options.concurrency = concurrency;
    options.max_retries = retries;
    options.backoff_base = std::chrono::milliseconds(backoff_ms);
    options.cache_enabled = !no_cache;
    if (!cache_dir.empty()) options.cache_dir = cache_dir;
    return std::make_unique<Gateway>(MakeBackend(config), options);
  }
};

struct SamplingFlags {
  SamplingConfig sampling;

  void Register(CLI::App* cmd) {
    cmd->add_option("--temperature", sampling.temperature)
        ->capture_default_str();
    cmd->add_option("--top-p", sampling.top_p)->capture_default_str();
    cmd->add_option("--min-tokens", sampling.min_tokens)
        ->capture_default_str();
    cmd->add_option("--max-tokens", sampling.max_tokens)
        ->capture_default_str();
  }
  SamplingConfig Get(const Globals& g) const {
    SamplingConfig s = sampling;
    s.seed = g.seed;
    return s;
  }
};

class Cli {
 public:
  Cli(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

  int Run(std::vector<std::string> args);

 private:
  void Log(const std::string& msg) {
    if (g_.verbose) err_ << msg << "\n";
  }
  const PromptLibrary* Prompts() {
    if (g_.prompts_dir.empty()) return nullptr;
    if (!prompts_) prompts_ = PromptLibrary::Load(g_.prompts_dir);
    return &*prompts_;
  }

  void SetupEval(CLI::App& app);
  void SetupDatagen(CLI::App& app);
  void SetupArena(CLI::App& app);
  void SetupContamination(CLI::App& app);
  void SetupCurate(CLI::App& app);
  void SetupReport(CLI::App& app);

  std::ostream& out_;
  std::ostream& err_;
  Globals g_;
  std::optional<PromptLibrary> prompts_;
  std::function<void()> action_;

  // eval
  std::string dataset_;
  std::string mode_;
  std::string out_dir_;
  std::string timestamp_;
  BackendFlags backend_;
  SamplingFlags sampling_;
  std::string baseline_;
  std::vector<std::string> runs_;
  std::vector<std::string> labels_;
  std::string json_out_;

  // datagen
  std::string seeds_;
  std::string policy_ = "high";
  double high_ = 1.0;
  double low_ = 0.0;
  std::optional<std::size_t> top_k_;
  std::optional<std::size_t> sample_;
  std::vector<std::string> separators_;
  std::string stages_ = "understand,solve,translate";

  // arena
  std::string a_path_;
  std::string b_path_;
  std::string a_name_ = "A";
  std::string b_name_ = "B";
  int iters_ = 1000;
  double k_ = kDefaultK;
  double initial_ = kDefaultInitialRating;

  // contamination
  std::string patterns_;
  std::string corpus_;
  std::string normalize_ = "none";
  int workers_ = 1;
  std::string report_out_;
  std::size_t min_length_ = kDefaultMinLength;
  std::string sources_;

  // curate
  std::string db_;
  std::string host_ = "127.0.0.1";
  int port_ = 8080;
  std::string static_dir_;
  int lease_minutes_ = 15;
  bool strip_dollars_ = false;
  std::string items_file_;
};

void Cli::SetupEval(CLI::App& app) {
  auto* eval = app.add_subcommand("eval", "Benchmark evaluation");
  eval->require_subcommand(1);

  auto* run = eval->add_subcommand("run", "Run a dataset through a mode");
  run->add_option("--dataset", dataset_, "Dataset JSONL")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--mode", mode_, "k2k, k2e, e2e, te2e or msi")
      ->required()
      ->transform(CLI::IsMember({"k2k", "k2e", "e2e", "te2e", "msi"},
                                CLI::ignore_case));
  run->add_option("--out", out_dir_, "Run directory")->required();
  run->add_option("--timestamp", timestamp_,
                  "Manifest timestamp (default: now)");
  backend_.Register(run, "backend", true);
  sampling_.Register(run);
  run->callback([this] {
    action_ = [this] {
      const auto dataset = LoadDataset(dataset_);
      const ValidationReport check = validate_dataset(dataset);
      if (!check.ok()) {
        for (const auto& f : check.findings) err_ << f.message << "\n";
        throw ValidationError(fmt::format("{}: {} problem(s)", dataset_,
                                          check.findings.size()));
      }
      auto gateway = backend_.Make();
      EvalOptions options;
      options.model_id = backend_.model;
      options.timestamp = timestamp_;
      options.prompts = Prompts();
      const SamplingConfig sampling = sampling_.Get(g_);
      const PromptingMode mode = mode_for(mode_);
      Log(fmt::format("running {} over {} items", mode_, dataset.size()));
      RunReport report;
      if (mode.name == ModeName::kMSI) {
        MsiRun run = run_msi(dataset, *gateway, sampling, options);
        SaveTraces(run.traces, out_dir_);
        report = std::move(run.report);
      } else if (mode.name == ModeName::kTE2E) {
        report = run_te2e(dataset, *gateway, sampling, options);
      } else {
        report = run_eval(dataset, mode, *gateway, sampling, options);
      }
      SaveRun(report, out_dir_);
      out_ << SummaryText(report);
      Log(fmt::format("backend calls {}, cache hits {}",
                      gateway->backend_calls(), gateway->cache_hits()));
    };
  });

  auto* compare =
      eval->add_subcommand("compare", "Accuracy deltas against a baseline run");
  compare->add_option("--baseline", baseline_, "Baseline run directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  compare->add_option("runs", runs_, "Run directories to compare")
      ->check(CLI::ExistingDirectory);
  compare->add_option("--labels", labels_,
                      "Row labels, baseline first (default: model and mode)");
  compare->add_option("--json", json_out_, "Also write the table as JSON");
  compare->callback([this] {
    action_ = [this] {
      std::vector<RunReport> reports{LoadRun(baseline_)};
      for (const auto& r : runs_) reports.push_back(LoadRun(r));
      const DeltaTable table = compare_runs(reports, labels_);
      out_ << render_report(table);
      if (!json_out_.empty()) {
        WriteFile(json_out_, DeltaTableJson(table).dump(2) + "\n");
      }
    };
  });
}

void Cli::SetupReport(CLI::App& app) {
  auto* report = app.add_subcommand(
      "report", "Accuracy table for run directories (first is the baseline)");
  report->add_option("runs", runs_, "Run directories")
      ->required()
      ->check(CLI::ExistingDirectory);
  report->add_option("--labels", labels_, "Row labels");
  report->add_option("--json", json_out_, "Also write the table as JSON");
  report->callback([this] {
    action_ = [this] {
      std::vector<RunReport> reports;
      for (const auto& r : runs_) reports.push_back(LoadRun(r));
      const DeltaTable table = compare_runs(reports, labels_);
      out_ << render_report(table);
      if (!json_out_.empty()) {
        WriteFile(json_out_, DeltaTableJson(table).dump(2) + "\n");
      }
    };
  });
}

void Cli::SetupDatagen(CLI::App& app) {
  auto* datagen = app.add_subcommand("datagen", "Training data generation");
  datagen->require_subcommand(1);
  auto* run = datagen->add_subcommand("run", "Build a staged training file");
  run->add_option("--seeds", seeds_, "Seed JSONL")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--policy", policy_, "Keep high or low reward scores")
      ->capture_default_str()
      ->check(CLI::IsMember({"high", "low"}));
  run->add_option("--high-thresh", high_)->capture_default_str();
  run->add_option("--low-thresh", low_)->capture_default_str();
  run->add_option("--top-k", top_k_, "Keep only the k best-scored samples");
  run->add_option("--sample", sample_, "Reservoir-sample this many seeds");
  run->add_option("--separators", separators_,
                  "Three stage separators (understand, solve, translate)")
      ->expected(3);
  run->add_option("--stages", stages_,
                  "Comma-separated stages to emit after the question")
      ->capture_default_str();
  run->add_option("--out", out_dir_, "Output directory")->required();
  backend_.Register(run, "backend", true);
  sampling_.Register(run);
  run->callback([this] {
    action_ = [this] {
      const auto seeds = LoadSeeds(seeds_);
      auto gateway = backend_.Make();
      DatagenOptions options;
      options.policy.keep = policy_ == "high" ? KeepSide::kHigh : KeepSide::kLow;
      options.policy.high_threshold = high_;
      options.policy.low_threshold = low_;
      options.policy.top_k = top_k_;
      options.sample_size = sample_;
      options.seed = g_.seed.value_or(0);
      options.model_id = backend_.model;
      options.sampling = sampling_.Get(g_);
      options.prompts = Prompts();
      if (!separators_.empty()) {
        options.separators = {separators_[0], separators_[1], separators_[2]};
      }
      options.mask = {false, false, false};
      std::stringstream ss(stages_);
      for (std::string stage; std::getline(ss, stage, ',');) {
        if (stage == "understand") {
          options.mask.understand = true;
        } else if (stage == "solve") {
          options.mask.solve = true;
        } else if (stage == "translate") {
          options.mask.translate = true;
        } else {
          throw std::invalid_argument("unknown stage '" + stage + "'");
        }
      }
      const DatagenReport r = run_datagen(seeds, *gateway, options, out_dir_);
      out_ << fmt::format(
          "input {}  emitted {}  discarded {}  skipped {}\nsha256 {}\n",
          r.input, r.emitted, r.discarded, r.skipped, r.file_hash);
    };
  });
}

void Cli::SetupArena(CLI::App& app) {
  auto* arena = app.add_subcommand("arena", "Pairwise judge comparison");
  arena->require_subcommand(1);
  auto* run = arena->add_subcommand("run", "Judge two answer sets, rate them");
  run->add_option("--a", a_path_, "Run directory or answers JSONL")
      ->required()
      ->check(CLI::ExistingPath);
  run->add_option("--b", b_path_, "Run directory or answers JSONL")
      ->required()
      ->check(CLI::ExistingPath);
  run->add_option("--name-a", a_name_)->capture_default_str();
  run->add_option("--name-b", b_name_)->capture_default_str();
  run->add_option("--dataset", dataset_,
                  "Dataset supplying question text for run directories");
  run->add_option("--iters", iters_, "Bootstrap iterations")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  run->add_option("--k", k_, "Elo K-factor")->capture_default_str();
  run->add_option("--initial", initial_, "Initial rating")
      ->capture_default_str();
  run->add_option("--out", out_dir_,
                  "Write matches.jsonl and report.json here");
  backend_.Register(run, "judge", true);
  sampling_.Register(run);
  run->callback([this] {
    action_ = [this] {
      if (a_name_ == b_name_) {
        throw std::invalid_argument("contestant names must differ");
      }
      std::vector<BilingualProblem> dataset;
      if (!dataset_.empty()) dataset = LoadDataset(dataset_);
      const Contestant a = LoadContestant(a_path_, a_name_, dataset);
      const Contestant b = LoadContestant(b_path_, b_name_, dataset);
      auto judge = backend_.Make();
      ArenaOptions options;
      options.seed = g_.seed.value_or(0);
      options.judge_model = backend_.model;
      options.sampling = sampling_.Get(g_);
      options.prompts = Prompts();
      const auto matches = run_matches(a, b, *judge, options);
      const EloResult elo =
          compute_elo(matches, k_, initial_, iters_, g_.seed.value_or(0));
      std::vector<ArenaRow> rows;
      for (const Contestant* c : {&a, &b}) {
        ArenaRow row;
        row.name = c->name;
        row.accuracy = c->accuracy;
        row.elo = elo.ratings.at(c->name);
        row.token_consumption = token_consumption(c->ledger());
        try {
          row.win_rate = win_rate(matches, c->name);
        } catch (const std::invalid_argument&) {
        }
        rows.push_back(row);
      }
      std::size_t inconclusive = 0;
      for (const auto& m : matches) {
        inconclusive += m.verdict == MatchVerdict::kInconclusive;
      }
      out_ << RenderArena(rows);
      out_ << fmt::format("matches {}  inconclusive {}\n", matches.size(),
                          inconclusive);
      if (!out_dir_.empty()) {
        std::string lines;
        for (const auto& m : matches) lines += json(m).dump() + "\n";
        WriteFile(fs::path(out_dir_) / "matches.jsonl", lines);
        WriteFile(fs::path(out_dir_) / "report.json",
                  json{{"rows", ArenaJson(rows)},
                       {"matches", matches.size()},
                       {"inconclusive", inconclusive},
                       {"iterations", iters_},
                       {"k", k_},
                       {"seed", g_.seed.value_or(0)}}
                          .dump(2) +
                      "\n");
      }
    };
  });
}

void Cli::SetupContamination(CLI::App& app) {
  auto* cont = app.add_subcommand("contamination", "Corpus contamination scan");
  cont->require_subcommand(1);
  auto* scan = cont->add_subcommand("scan", "Exact-match scan of a corpus");
  scan->add_option("--patterns", patterns_,
                   "Dataset JSONL or {id, text} JSONL")
      ->required()
      ->check(CLI::ExistingFile);
  scan->add_option("--corpus", corpus_, "JSONL file or directory")
      ->required()
      ->check(CLI::ExistingPath);
  scan->add_option("--normalize", normalize_, "none or ws")
      ->capture_default_str()
      ->check(CLI::IsMember({"none", "ws"}));
  scan->add_option("--workers", workers_)
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  scan->add_option("--min-length", min_length_,
                   "Shorter patterns are excluded (code points)")
      ->capture_default_str();
  scan->add_option("--sources", sources_,
                   "File of URL prefixes; other URLs are skipped");
  scan->add_option("--report", report_out_,
                   "Write OUT.json and OUT.txt reports");
  scan->callback([this] {
    action_ = [this] {
      const auto items = LoadPatternItems(patterns_);
      const PatternSet set = compile_patterns(
          items,
          normalize_ == "ws" ? Normalization::kWhitespaceCollapse
                             : Normalization::kNone,
          min_length_);
      for (const auto& id : set.excluded_ids) {
        err_ << "warning: pattern " << id << " shorter than " << min_length_
             << " characters, excluded\n";
      }
      ScanOptions options;
      options.workers = workers_;
      if (!sources_.empty()) {
        std::ifstream in(sources_);
        if (!in) throw ValidationError("cannot read " + sources_);
        for (std::string line; std::getline(in, line);) {
          if (!line.empty()) options.source_prefixes.push_back(line);
        }
      }
      auto corpus = OpenCorpus(corpus_);
      const MatchReport report = scan_stream(set, *corpus, options);
      const std::string text = ReportText(set, report);
      out_ << text;
      if (!report_out_.empty()) {
        WriteFile(report_out_ + ".json",
                  ReportJson(set, report).dump(2) + "\n");
        WriteFile(report_out_ + ".txt", text);
      }
    };
  });
}

void Cli::SetupCurate(CLI::App& app) {
  auto* curate = app.add_subcommand("curate", "Human review queue");
  curate->require_subcommand(1);
  auto add_db = [this](CLI::App* cmd) {
    cmd->add_option("--db", db_, "SQLite database file")->required();
    cmd->add_option("--lease-minutes", lease_minutes_)
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
  };
  auto options = [this] {
    CurationOptions o;
    o.lease_duration = std::chrono::minutes(lease_minutes_);
    o.strip_dollar_math = strip_dollars_;
    return o;
  };

  auto* serve = curate->add_subcommand("serve", "Serve the review API");
  add_db(serve);
  serve->add_option("--host", host_)->capture_default_str();
  serve->add_option("--port", port_, "0 picks a free port")
      ->capture_default_str();
  serve->add_option("--static", static_dir_, "Review UI bundle directory")
      ->check(CLI::ExistingDirectory);
  serve->callback([this, options] {
    action_ = [this, options] {
      CurationStore store(db_, options());
      ServerOptions so;
      so.host = host_;
      so.port = port_;
      if (!static_dir_.empty()) so.static_dir = static_dir_;
      CurationServer server(store, so);
      const int port = server.Bind();
      out_ << "listening on http://" << host_ << ":" << port << std::endl;
      {
        std::lock_guard lock(g_servers_mu);
        g_servers.push_back(&server);
      }
      auto old_int = std::signal(SIGINT, HandleStopSignal);
      auto old_term = std::signal(SIGTERM, HandleStopSignal);
      server.Listen();
      std::signal(SIGINT, old_int);
      std::signal(SIGTERM, old_term);
      std::lock_guard lock(g_servers_mu);
      std::erase(g_servers, &server);
    };
  });

  auto* enqueue = curate->add_subcommand("enqueue", "Add items to the queue");
  add_db(enqueue);
  enqueue->add_option("--file", items_file_, "JSON array or JSONL of items")
      ->required()
      ->check(CLI::ExistingFile);
  enqueue->add_flag("--strip-dollars", strip_dollars_,
                    "Remove $...$ around LaTeX in candidate text");
  enqueue->callback([this, options] {
    action_ = [this, options] {
      CurationStore store(db_, options());
      const auto items = LoadReviewItems(items_file_);
      const EnqueueResult r = store.enqueue(items);
      out_ << fmt::format("added {}  unchanged {}\n", r.added, r.unchanged);
    };
  });

  auto* exp = curate->add_subcommand("export", "Write accepted/edited items");
  add_db(exp);
  exp->add_option("--out", out_dir_, "Output JSONL")->required();
  exp->callback([this, options] {
    action_ = [this, options] {
      CurationStore store(db_, options());
      const auto items = store.export_reviewed();
      WriteFile(out_dir_, ExportJsonl(items));
      const QueueStats s = store.stats();
      out_ << fmt::format(
          "exported {}  (accepted {}, edited {}, rejected {}, pending {})\n",
          items.size(), s.accepted, s.edited, s.rejected, s.pending);
    };
  });
}

int Cli::Run(std::vector<std::string> args) {
  CLI::App app{"Bilingual math reasoning toolkit", "bimath"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML/INI file with default flag values");
  app.add_option("--seed", g_.seed, "Seed for sampling and resampling");
  app.add_flag("-v,--verbose", g_.verbose, "Progress on stderr");
  app.add_option("--prompts", g_.prompts_dir,
                 "Prompt asset directory (default: bundled assets)");
  SetupEval(app);
  SetupDatagen(app);
  SetupArena(app);
  SetupContamination(app);
  SetupCurate(app);
  SetupReport(app);

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out_, err_);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out_, err_);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out_, err_);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out_, err_);
    return kExitUsage;
  }
  if (!action_) return kExitUsage;
  try {
    action_();
    return kExitOk;
  } catch (const ValidationError& e) {
    err_ << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const CurationError& e) {
    err_ << "error: " << e.what() << "\n";
    return e.code() == CurationError::Code::kInvalid ||
                   e.code() == CurationError::Code::kConflict
               ? kExitValidation
               : kExitRuntime;
  } catch (const std::invalid_argument& e) {
    err_ << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err_ << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err) {
  Cli cli(out, err);
  return cli.Run(args);
}

}  // namespace bimath
