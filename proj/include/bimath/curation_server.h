// Copyright 2026 The bimath Authors
// SPDX-License-Identifier: Apache-2.0

// HTTP front end of the review queue.
//
//   GET  /api/queue/next?reviewer=ID   200 {item, lease} or 204
//   POST /api/items/{id}/decision      {reviewer, decision, edited_text?, note?}
//   GET  /api/items/{id}
//   GET  /api/export                   JSONL
//   GET  /api/stats
//
// Errors are {"error": message} with 400, 404 or 409. Any other path is
// served from the static directory when one is configured.

#ifndef BIMATH_CURATION_SERVER_H_
#define BIMATH_CURATION_SERVER_H_

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "bimath/curation.h"

namespace httplib {
class Server;
}

namespace bimath {

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::optional<std::filesystem::path> static_dir;
};

class CurationServer {
 public:
  CurationServer(CurationStore& store, ServerOptions options = {});
  ~CurationServer();

  // Binds the socket; returns the bound port. Throws Error on failure.
  int Bind();
  // Serves until Stop(); call Bind() first.
  void Listen();
  void Stop();
  bool running() const;

 private:
  CurationStore& store_;
  ServerOptions options_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace bimath

#endif  // BIMATH_CURATION_SERVER_H_
