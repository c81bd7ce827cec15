// SPDX-License-Identifier: Apache-2.0
#include "finch/finch.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <new>
#include <sstream>
#include <string>

#include "error.hpp"
#include "explain.hpp"
#include "serialize.hpp"
#include "service.hpp"
#include "session.hpp"
#include "synth.hpp"

struct finch_engine {
  std::shared_ptr<finch::Engine> engine;
};

struct finch_server {
  std::unique_ptr<finch::Service> service;
};

namespace {

thread_local std::string last_error;
thread_local std::string last_detail;

finch_status fail(finch::ErrorCode code, std::string message, std::string detail) {
  last_error = std::move(message);
  last_detail = std::move(detail);
  return static_cast<finch_status>(code);
}

template <class F>
finch_status guard(F&& f) noexcept {
  try {
    f();
    last_error.clear();
    last_detail.clear();
    return FINCH_OK;
  } catch (const finch::Error& e) {
    return fail(e.code(), e.what(), e.detail());
  } catch (const nlohmann::json::parse_error& e) {
    return fail(finch::ErrorCode::parse, "invalid JSON", e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(finch::ErrorCode::invalid_argument, "malformed JSON request", e.what());
  } catch (const std::bad_alloc&) {
    return fail(finch::ErrorCode::internal, "out of memory", "");
  } catch (const std::exception& e) {
    return fail(finch::ErrorCode::internal, "internal error", e.what());
  } catch (...) {
    return fail(finch::ErrorCode::internal, "unknown error", "");
  }
}

char* dup(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

void require(const void* p, const char* what) {
  if (!p) throw finch::Error(finch::ErrorCode::invalid_argument, std::string(what) + " is NULL");
}

nlohmann::json parse_or_empty(const char* text) {
  if (!text || !*text) return nlohmann::json::object();
  return nlohmann::json::parse(text);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw finch::Error(finch::ErrorCode::io, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Output is only assigned on success; callers see NULL otherwise.
template <class F>
finch_status with_out(char** out, F&& f) noexcept {
  if (out) *out = nullptr;
  return guard([&] {
    require(out, "out");
    *out = dup(f());
  });
}

}  // namespace

extern "C" {

void finch_string_free(char* s) { std::free(s); }

const char* finch_version(void) { return "0.1.0"; }

const char* finch_last_error(void) { return last_error.c_str(); }
const char* finch_last_error_detail(void) { return last_detail.c_str(); }

const char* finch_status_name(finch_status status) {
  if (status == FINCH_OK) return "ok";
  if (status < FINCH_INVALID_ARGUMENT || status > FINCH_INTERNAL_ERROR) return "unknown";
  return finch::error_code_name(static_cast<finch::ErrorCode>(status)).data();
}

finch_status finch_engine_create(const char* config_json, finch_engine** out) {
  if (out) *out = nullptr;
  return guard([&] {
    require(out, "out");
    const auto config = config_json ? finch::Config::from_json_text(config_json)
                                    : finch::Config::from_environment();
    *out = new finch_engine{std::make_shared<finch::Engine>(config)};
  });
}

void finch_engine_destroy(finch_engine* engine) { delete engine; }

finch_status finch_load_dataset(finch_engine* engine, const char* path, const char* schema_json,
                                const char* dataset_id, char** out) {
  return with_out(out, [&] {
    require(engine, "engine");
    require(path, "path");
    const std::string schema_text =
        schema_json ? std::string(schema_json) : read_file(finch::schema_sidecar_path(path));
    const std::string id =
        dataset_id ? std::string(dataset_id) : std::filesystem::path(path).stem().string();
    return engine->engine->load_dataset_file(path, finch::Schema::from_json_text(schema_text), id).dump();
  });
}

finch_status finch_add_dataset(finch_engine* engine, const char* bytes, unsigned long size,
                               const char* schema_json, char** out) {
  return with_out(out, [&] {
    require(engine, "engine");
    require(bytes, "bytes");
    require(schema_json, "schema_json");
    return engine->engine
        ->add_dataset(std::string_view(bytes, size), finch::Schema::from_json_text(schema_json))
        .dump();
  });
}

finch_status finch_load_directory(finch_engine* engine, const char* dir, char** out) {
  return with_out(out, [&] {
    require(engine, "engine");
    require(dir, "dir");
    return engine->engine->load_directory(dir).dump();
  });
}

finch_status finch_overview(finch_engine* engine, const char* dataset_id, const char* request_json,
                            char** out) {
  return with_out(out, [&] {
    require(engine, "engine");
    require(dataset_id, "dataset_id");
    return engine->engine->overview(dataset_id, parse_or_empty(request_json)).dump();
  });
}

finch_status finch_session_create(finch_engine* engine, const char* request_json, char** out) {
  return with_out(out, [&] {
    require(engine, "engine");
    require(request_json, "request_json");
    return engine->engine->create_session(nlohmann::json::parse(request_json)).dump();
  });
}

finch_status finch_session_command(finch_engine* engine, const char* session_id,
                                   const char* command_json, char** out) {
  return with_out(out, [&] {
    require(engine, "engine");
    require(session_id, "session_id");
    require(command_json, "command_json");
    return engine->engine->command(session_id, nlohmann::json::parse(command_json)).dump();
  });
}

finch_status finch_session_payload(finch_engine* engine, const char* session_id, char** out) {
  return with_out(out, [&] {
    require(engine, "engine");
    require(session_id, "session_id");
    return engine->engine->payload(session_id);
  });
}

finch_status finch_session_ranking(finch_engine* engine, const char* session_id, const char* kind,
                                   char** out) {
  return with_out(out, [&] {
    require(engine, "engine");
    require(session_id, "session_id");
    std::optional<finch::ScoreKind> k;
    if (kind) {
      k = finch::parse_score_kind(kind);
      if (!k) throw finch::Error(finch::ErrorCode::invalid_argument, std::string("unknown ranking kind '") + kind + "'");
    }
    return engine->engine->ranking(session_id, k);
  });
}

finch_status finch_session_close(finch_engine* engine, const char* session_id) {
  return guard([&] {
    require(engine, "engine");
    require(session_id, "session_id");
    engine->engine->close_session(session_id);
  });
}

finch_status finch_explain(finch_engine* engine, const char* request_json, char** out) {
  return with_out(out, [&] {
    require(engine, "engine");
    require(request_json, "request_json");
    const auto request = nlohmann::json::parse(request_json);
    if (!request.is_object() || !request.contains("dataset_id") || !request["dataset_id"].is_string())
      throw finch::Error(finch::ErrorCode::invalid_argument, "explain request needs a dataset_id");
    const auto ds = engine->engine->dataset(request["dataset_id"].get<std::string>());
    return finch::explain(ds, request, engine->engine->config()).dump();
  });
}

finch_status finch_synth(const char* spec_json, const char* out_path) {
  return guard([&] {
    require(out_path, "out_path");
    const auto spec = spec_json ? finch::SynthSpec::from_json_text(spec_json) : finch::SynthSpec{};
    finch::write_synthetic(spec, out_path);
  });
}

finch_status finch_pdp_compare(finch_engine* engine, const char* path, const char* feature, char** out) {
  return with_out(out, [&] {
    require(engine, "engine");
    require(path, "path");
    require(feature, "feature");
    return finch::wire::pdp_comparison(finch::pdp_compare(path, feature, engine->engine->config())).dump();
  });
}

finch_status finch_server_start(finch_engine* engine, const char* host, int port, finch_server** out) {
  if (out) *out = nullptr;
  return guard([&] {
    require(engine, "engine");
    require(out, "out");
    if (port < 0 || port > 65535)
      throw finch::Error(finch::ErrorCode::invalid_argument, "port out of range");
    auto server = std::make_unique<finch_server>();
    server->service = std::make_unique<finch::Service>(engine->engine);
    server->service->start(host ? host : "127.0.0.1", port);
    *out = server.release();
  });
}

int finch_server_port(const finch_server* server) { return server ? server->service->port() : -1; }

void finch_server_stop(finch_server* server) {
  if (!server) return;
  server->service->stop();
  delete server;
}

}  // extern "C"
