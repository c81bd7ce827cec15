// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <string>
#include <thread>

#include "error.hpp"
#include "session.hpp"

namespace httplib {
class Server;
}

namespace finch {

/// JSON-over-HTTP front end for an Engine.
///
///   GET    /health
///   POST   /datasets                     multipart: table (file), schema (json)
///   GET    /datasets/{id}
///   GET    /datasets/{id}/overview       ?instance=&row=&class=
///   POST   /sessions                     {"dataset_id", "target"?, "instance"?, "x_feature"?}
///   GET    /sessions/{id}
///   POST   /sessions/{id}/commands       {"command", "args"}
///   GET    /sessions/{id}/payload
///   GET    /sessions/{id}/ranking        ?kind=
///   DELETE /sessions/{id}
///
/// Errors are {"code", "message", "detail"} with a 4xx/5xx status.
class Service {
 public:
  explicit Service(std::shared_ptr<Engine> engine);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds and starts serving on a background thread. Port 0 picks a free port.
  /// Returns the bound port; throws bind error on failure.
  int start(const std::string& host, int port);
  int port() const noexcept { return port_; }
  void stop();
  bool running() const;

 private:
  void routes();

  std::shared_ptr<Engine> engine_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
};

int http_status(ErrorCode code) noexcept;

}  // namespace finch
