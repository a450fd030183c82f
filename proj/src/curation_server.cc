// Copyright 2026 The bimath Authors
// SPDX-License-Identifier: Apache-2.0

#include "bimath/curation_server.h"

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace bimath {
namespace {

using json = nlohmann::json;

void SendJson(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void SendError(httplib::Response& res, int status, const std::string& msg) {
  SendJson(res, status, {{"error", msg}});
}

int StatusFor(CurationError::Code code) {
  switch (code) {
    case CurationError::Code::kNotFound:
      return 404;
    case CurationError::Code::kConflict:
      return 409;
    case CurationError::Code::kInvalid:
      return 400;
  }
  return 400;
}

json LeaseJson(const Lease& lease) {
  return {{"item_id", lease.item_id},
          {"reviewer", lease.reviewer},
          {"expires_at_ms", lease.expires_at_ms}};
}

template <typename Fn>
httplib::Server::Handler Guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const CurationError& e) {
      SendError(res, StatusFor(e.code()), e.what());
    } catch (const json::exception& e) {
      SendError(res, 400, std::string("bad request body: ") + e.what());
    } catch (const std::exception& e) {
      SendError(res, 500, e.what());
    }
  };
}

}  // namespace

CurationServer::CurationServer(CurationStore& store, ServerOptions options)
    : store_(store),
      options_(std::move(options)),
      server_(std::make_unique<httplib::Server>()) {
  auto& s = *server_;
  s.Get("/api/queue/next",
        Guarded([this](const httplib::Request& req, httplib::Response& res) {
          const std::string reviewer = req.get_param_value("reviewer");
          if (reviewer.empty()) {
            SendError(res, 400, "reviewer parameter required");
            return;
          }
          auto leased = store_.next_pending(reviewer);
          if (!leased) {
            res.status = 204;
            return;
          }
          SendJson(res, 200,
                   {{"item", leased->item}, {"lease", LeaseJson(leased->lease)}});
        }));
  s.Post(R"(/api/items/([^/]+)/decision)",
         Guarded([this](const httplib::Request& req, httplib::Response& res) {
           const std::string id = req.matches[1];
           const json body = json::parse(req.body);
           std::string reviewer = body.value("reviewer", std::string());
           if (reviewer.empty()) reviewer = req.get_param_value("reviewer");
           if (reviewer.empty()) {
             SendError(res, 400, "reviewer required");
             return;
           }
           const auto decision =
               ParseDecision(body.value("decision", std::string()));
           if (!decision) {
             SendError(res, 400, "decision must be accept, edit or reject");
             return;
           }
           std::optional<std::string> edited;
           if (auto it = body.find("edited_text");
               it != body.end() && !it->is_null()) {
             edited = it->get<std::string>();
           }
           std::optional<std::string> note;
           if (auto it = body.find("note"); it != body.end() && !it->is_null()) {
             note = it->get<std::string>();
           }
           SendJson(res, 200,
                    store_.submit_decision(id, reviewer, *decision, edited,
                                           note));
         }));
  s.Get(R"(/api/items/([^/]+))",
        Guarded([this](const httplib::Request& req, httplib::Response& res) {
          auto item = store_.get(req.matches[1]);
          if (!item) {
            SendError(res, 404, "no such item");
            return;
          }
          json body = *item;
          if (auto lease = store_.lease_of(item->item_id)) {
            body["lease"] = LeaseJson(*lease);
          }
          SendJson(res, 200, body);
        }));
  s.Get("/api/export",
        Guarded([this](const httplib::Request&, httplib::Response& res) {
          res.status = 200;
          res.set_content(ExportJsonl(store_.export_reviewed()),
                          "application/x-ndjson");
        }));
  s.Get("/api/stats",
        Guarded([this](const httplib::Request&, httplib::Response& res) {
          const QueueStats st = store_.stats();
          SendJson(res, 200,
                   {{"pending", st.pending},
                    {"leased", st.leased},
                    {"accepted", st.accepted},
                    {"edited", st.edited},
                    {"rejected", st.rejected},
                    {"total", st.total()}});
        }));
  if (options_.static_dir) {
    if (!s.set_mount_point("/", options_.static_dir->string())) {
      throw Error("static directory " + options_.static_dir->string() +
                  " does not exist");
    }
  }
}

CurationServer::~CurationServer() { Stop(); }

int CurationServer::Bind() {
  int port = options_.port;
  if (port == 0) {
    port = server_->bind_to_any_port(options_.host);
  } else if (!server_->bind_to_port(options_.host, port)) {
    port = -1;
  }
  if (port < 0) {
    throw Error("cannot bind " + options_.host + ":" +
                std::to_string(options_.port));
  }
  return port;
}

void CurationServer::Listen() { server_->listen_after_bind(); }

void CurationServer::Stop() {
  if (server_) server_->stop();
}

bool CurationServer::running() const { return server_->is_running(); }

}  // namespace bimath
