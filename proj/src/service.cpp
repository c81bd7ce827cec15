// SPDX-License-Identifier: Apache-2.0
#include "service.hpp"

#include <exception>

#include "error.hpp"
#include "httplib.h"
#include "serialize.hpp"

namespace finch {

using nlohmann::json;

int http_status(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::not_found: return 404;
    case ErrorCode::chain:
    case ErrorCode::unavailable: return 409;
    case ErrorCode::io:
    case ErrorCode::bind:
    case ErrorCode::internal: return 500;
    default: return 400;
  }
}

namespace {

void send(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, ErrorCode code, const std::string& message,
                const std::string& detail) {
  send(res, {{"code", error_code_name(code)}, {"message", message}, {"detail", detail}},
       http_status(code));
}

json body_json(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::parse, "request body is not valid JSON", e.what());
  }
}

// Wraps a handler so engine errors become structured responses.
template <class F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const Error& e) {
      send_error(res, e.code(), e.what(), e.detail());
    } catch (const json::exception& e) {
      send_error(res, ErrorCode::invalid_argument, "malformed request", e.what());
    } catch (const std::exception& e) {
      send_error(res, ErrorCode::internal, "internal error", e.what());
    }
  };
}

json instance_from_query(const httplib::Request& req) {
  json request = json::object();
  auto row_of = [](const std::string& v) {
    try {
      std::size_t used = 0;
      const long long r = std::stoll(v, &used);
      if (used == v.size()) return json{{"row", r}};
    } catch (const std::logic_error&) {
    }
    throw Error(ErrorCode::invalid_argument, "row must be an integer", v);
  };
  if (req.has_param("row")) request["instance"] = row_of(req.get_param_value("row"));
  if (req.has_param("instance")) {
    // A row number, or an instance object: {"row": n} or {"values": {...}}.
    const std::string v = req.get_param_value("instance");
    if (!v.empty() && v.front() == '{') {
      try {
        request["instance"] = json::parse(v);
      } catch (const json::parse_error& e) {
        throw Error(ErrorCode::parse, "instance is not valid JSON", e.what());
      }
    } else {
      request["instance"] = row_of(v);
    }
  }
  if (req.has_param("class")) request["target"] = {{"class", req.get_param_value("class")}};
  return request;
}

}  // namespace

Service::Service(std::shared_ptr<Engine> engine)
    : engine_(std::move(engine)), server_(std::make_unique<httplib::Server>()) {
  // The library default adds SO_REUSEPORT, which lets a second server bind a
  // busy port silently.
  server_->set_socket_options([](socket_t sock) {
    int yes = 1;
    ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof(yes));
  });
  routes();
}

Service::~Service() { stop(); }

void Service::routes() {
  auto& s = *server_;
  Engine& engine = *engine_;

  s.Get("/health", guarded([](const httplib::Request&, httplib::Response& res) {
          send(res, {{"status", "ok"}});
        }));

  s.Post("/datasets", guarded([&engine](const httplib::Request& req, httplib::Response& res) {
           if (!req.has_file("table"))
             throw Error(ErrorCode::invalid_argument, "multipart field 'table' is required");
           Schema schema;
           if (req.has_file("schema"))
             schema = Schema::from_json_text(req.get_file_value("schema").content);
           else if (req.has_file("roles"))
             schema = Schema::from_assignments(req.get_file_value("roles").content);
           else
             throw Error(ErrorCode::schema, "multipart field 'schema' is required",
                         "give a JSON object mapping columns to roles");
           std::optional<std::string> id;
           if (req.has_file("id")) id = req.get_file_value("id").content;
           send(res, engine.add_dataset(req.get_file_value("table").content, schema, id), 201);
         }));

  s.Get(R"(/datasets/([^/]+))", guarded([&engine](const httplib::Request& req, httplib::Response& res) {
          const auto entry = engine.dataset(req.matches[1]);
          json info = wire::dataset_info(*entry->data);
          info["dataset_id"] = entry->id;
          send(res, info);
        }));

  s.Get(R"(/datasets/([^/]+)/overview)",
        guarded([&engine](const httplib::Request& req, httplib::Response& res) {
          send(res, engine.overview(req.matches[1], instance_from_query(req)));
        }));

  s.Post("/sessions", guarded([&engine](const httplib::Request& req, httplib::Response& res) {
           send(res, engine.create_session(body_json(req)), 201);
         }));

  s.Get(R"(/sessions/([^/]+))", guarded([&engine](const httplib::Request& req, httplib::Response& res) {
          send(res, session_summary(*engine.snapshot(req.matches[1])));
        }));

  s.Delete(R"(/sessions/([^/]+))",
           guarded([&engine](const httplib::Request& req, httplib::Response& res) {
             engine.close_session(req.matches[1]);
             res.status = 204;
           }));

  s.Post(R"(/sessions/([^/]+)/commands)",
         guarded([&engine](const httplib::Request& req, httplib::Response& res) {
           send(res, engine.command(req.matches[1], body_json(req)));
         }));

  s.Get(R"(/sessions/([^/]+)/payload)",
        guarded([&engine](const httplib::Request& req, httplib::Response& res) {
          res.set_content(engine.payload(req.matches[1]), "application/json");
        }));

  s.Get(R"(/sessions/([^/]+)/ranking)",
        guarded([&engine](const httplib::Request& req, httplib::Response& res) {
          std::optional<ScoreKind> kind;
          if (req.has_param("kind")) {
            kind = parse_score_kind(req.get_param_value("kind"));
            if (!kind)
              throw Error(ErrorCode::invalid_argument, "unknown ranking kind",
                          "expected interaction_at_instance | total_change");
          }
          res.set_content(engine.ranking(req.matches[1], kind), "application/json");
        }));

  s.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (res.status == 404 && res.body.empty())
      send_error(res, ErrorCode::not_found, "no route for " + req.method + " " + req.path, "");
  });
}

int Service::start(const std::string& host, int port) {
  if (thread_.joinable()) throw Error(ErrorCode::invalid_argument, "service already started");
  int bound = 0;
  if (port == 0) {
    bound = server_->bind_to_any_port(host);
  } else if (server_->bind_to_port(host, port)) {
    bound = port;
  }
  if (bound <= 0)
    throw Error(ErrorCode::bind, "cannot bind " + host + ":" + std::to_string(port));
  port_ = bound;
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port_;
}

void Service::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

bool Service::running() const { return server_ && server_->is_running(); }

}  // namespace finch
