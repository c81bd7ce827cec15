// SPDX-License-Identifier: Apache-2.0
// Command line front end. Talks to the engine only through the C API.
#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <unistd.h>

#include "CLI11.hpp"
#include "finch/finch.h"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::atomic<bool> interrupted{false};

extern "C" void on_signal(int) { interrupted = true; }

struct Failure {
  finch_status status;
  std::string message;
  std::string detail;
};

int exit_code(finch_status s) {
  switch (s) {
    case FINCH_OK: return 0;
    case FINCH_IO_ERROR:
    case FINCH_INTERNAL_ERROR: return 1;
    case FINCH_BIND_ERROR: return 3;
    default: return 2;
  }
}

void check(finch_status s) {
  if (s != FINCH_OK) throw Failure{s, finch_last_error(), finch_last_error_detail()};
}

std::string take(char* s) {
  std::string out(s ? s : "");
  finch_string_free(s);
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{FINCH_IO_ERROR, "cannot open '" + path + "'", ""};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text << '\n';
    return;
  }
  fs::path tmp = path;
  tmp += ".tmp-" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << text << '\n';
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw Failure{FINCH_IO_ERROR, "cannot write '" + path + "'", ""};
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Failure{FINCH_IO_ERROR, "cannot write '" + path + "'", ec.message()};
  }
}

struct EngineHandle {
  finch_engine* e = nullptr;
  explicit EngineHandle(const std::string& config_path) {
    const std::string cfg = config_path.empty() ? "" : read_file(config_path);
    check(finch_engine_create(config_path.empty() ? nullptr : cfg.c_str(), &e));
  }
  ~EngineHandle() { finch_engine_destroy(e); }
  EngineHandle(const EngineHandle&) = delete;
  EngineHandle& operator=(const EngineHandle&) = delete;
};

void load(finch_engine* e, const std::string& data, const std::string& schema_path, const char* id) {
  const std::string schema = schema_path.empty() ? "" : read_file(schema_path);
  char* out = nullptr;
  check(finch_load_dataset(e, data.c_str(), schema_path.empty() ? nullptr : schema.c_str(), id, &out));
  take(out);
}

json parse_assignments(const std::string& text) {
  json values = json::object();
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos)
      throw Failure{FINCH_INVALID_ARGUMENT, "expected name=value in '" + item + "'", ""};
    const std::string value = item.substr(eq + 1);
    try {
      std::size_t used = 0;
      const double v = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
      values[item.substr(0, eq)] = v;
    } catch (const std::logic_error&) {
      throw Failure{FINCH_INVALID_ARGUMENT, "value for '" + item.substr(0, eq) + "' is not a number", value};
    }
  }
  return values;
}

std::vector<std::string> split(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

struct ExplainArgs {
  std::string data, schema, x, chain, instance_values, target, cls, out;
  std::optional<long long> instance_row;
  bool no_smoothing = false;
  bool show_truth = false;
  bool uncertainty = false;
  bool ranking = false;
  std::string rank_kind;
};

json session_request(const ExplainArgs& a) {
  json req = {{"dataset_id", "data"}, {"x_feature", a.x}};
  if (a.instance_row) req["instance"] = {{"row", *a.instance_row}};
  else if (!a.instance_values.empty()) req["instance"] = {{"values", parse_assignments(a.instance_values)}};
  json target = json::object();
  if (!a.target.empty()) target["mode"] = a.target;
  if (!a.cls.empty()) target["class"] = a.cls;
  if (!target.empty()) req["target"] = target;
  return req;
}

int run_explain(const std::string& config, const ExplainArgs& a) {
  EngineHandle h(config);
  load(h.e, a.data, a.schema, "data");
  json req = session_request(a);
  req["chain"] = split(a.chain);
  req["view"] = {{"smoothing_enabled", !a.no_smoothing},
                 {"show_truth", a.show_truth},
                 {"show_uncertainty", a.uncertainty}};
  char* out = nullptr;
  check(finch_explain(h.e, req.dump().c_str(), &out));
  write_output(a.out, take(out));
  return 0;
}

int run_rank(const std::string& config, const ExplainArgs& a) {
  EngineHandle h(config);
  load(h.e, a.data, a.schema, "data");
  char* out = nullptr;
  check(finch_session_create(h.e, session_request(a).dump().c_str(), &out));
  const std::string sid = json::parse(take(out))["session_id"].get<std::string>();
  for (const auto& f : split(a.chain)) {
    const json cmd = {{"command", "add_feature"}, {"args", {{"feature", f}}}};
    check(finch_session_command(h.e, sid.c_str(), cmd.dump().c_str(), &out));
    take(out);
  }
  check(finch_session_ranking(h.e, sid.c_str(), a.rank_kind.empty() ? nullptr : a.rank_kind.c_str(), &out));
  write_output(a.out, take(out));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Subset-conditioned dependence curves for model explanation"};
  app.require_subcommand(1);
  std::string config;
  app.add_option("--config", config, "Engine config JSON file (default: $FINCH_CONFIG)");
  app.set_version_flag("--version", std::string(finch_version()));

  ExplainArgs ea;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--data", ea.data, "Input CSV")->required();
    sub->add_option("--schema", ea.schema, "Column roles JSON (default: <stem>.schema.json)");
    sub->add_option("--x", ea.x, "x-axis feature")->required();
    sub->add_option("--chain", ea.chain, "Comma-separated conditioning features");
    auto* row = sub->add_option("--instance-row", ea.instance_row, "Use this table row as the instance");
    sub->add_option("--instance-values", ea.instance_values, "Custom instance name=value,...")
        ->excludes(row);
    sub->add_option("--target", ea.target, "regression | classification");
    sub->add_option("--class", ea.cls, "Class label for classification targets");
    sub->add_option("--out", ea.out, "Output file (default: stdout)");
  };

  auto* explain = app.add_subcommand("explain", "Explain one instance along a fixed chain");
  add_common(explain);
  explain->add_flag("--no-smoothing", ea.no_smoothing, "Disable curve smoothing");
  explain->add_flag("--show-truth", ea.show_truth, "Overlay the ground-truth curve");
  explain->add_flag("--uncertainty", ea.uncertainty, "Include the dispersion band");

  auto* rank = app.add_subcommand("rank", "Rank candidate next features for a chain");
  add_common(rank);
  rank->add_option("--kind", ea.rank_kind, "interaction_at_instance | total_change");

  std::string synth_out, function = "product", poly, features = "x,z,w";
  std::size_t rows = 10000, levels = 10;
  std::uint64_t seed = 7;
  double constant = 2.0, correlation = 0.0;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic table with known structure");
  synth->add_option("--out", synth_out, "Output CSV")->required();
  synth->add_option("--function", function, "additive | product | constant | custom-polynomial")
      ->check(CLI::IsMember({"additive", "product", "constant", "custom-polynomial"}));
  synth->add_option("--poly", poly, "Expression for custom-polynomial, e.g. '2*x*z - w'");
  synth->add_option("--rows", rows, "Row count");
  synth->add_option("--levels", levels, "Quantization levels per feature (0: none)");
  synth->add_option("--seed", seed, "RNG seed");
  synth->add_option("--constant", constant, "Value for the constant function");
  synth->add_option("--correlation", correlation, "Noise sd coupling the second feature to the first");
  synth->add_option("--features", features, "Comma-separated feature names");

  std::string pdp_data, pdp_feature, pdp_out;
  auto* pdp = app.add_subcommand("pdp-compare", "Compare the full-data curve with a mutation PDP");
  pdp->add_option("--data", pdp_data, "Synthetic CSV with .synth.json sidecar")->required();
  pdp->add_option("--feature", pdp_feature, "Feature to compare")->required();
  pdp->add_option("--out", pdp_out, "Output file (default: stdout)");

  std::string host = "127.0.0.1", data_dir;
  std::vector<std::string> serve_data;
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "Run the HTTP session service");
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port (0: pick a free one)")->check(CLI::Range(0, 65535));
  serve->add_option("--data-dir", data_dir, "Preload every CSV with a schema sidecar");
  serve->add_option("--data", serve_data, "Preload a CSV (id: file stem)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*explain) return run_explain(config, ea);
    if (*rank) return run_rank(config, ea);
    if (*synth) {
      json spec = {{"function", function}, {"rows", rows}, {"levels", levels}, {"seed", seed},
                   {"constant", constant}, {"correlation_noise", correlation},
                   {"features", split(features)}};
      if (!poly.empty()) spec["expression"] = poly;
      check(finch_synth(spec.dump().c_str(), synth_out.c_str()));
      std::cerr << "wrote " << synth_out << '\n';
      return 0;
    }
    if (*pdp) {
      EngineHandle h(config);
      char* out = nullptr;
      check(finch_pdp_compare(h.e, pdp_data.c_str(), pdp_feature.c_str(), &out));
      write_output(pdp_out, take(out));
      return 0;
    }
    if (*serve) {
      EngineHandle h(config);
      char* out = nullptr;
      if (!data_dir.empty()) {
        check(finch_load_directory(h.e, data_dir.c_str(), &out));
        take(out);
      }
      for (const auto& d : serve_data) load(h.e, d, "", nullptr);
      finch_server* server = nullptr;
      check(finch_server_start(h.e, host.c_str(), port, &server));
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cout << "listening on http://" << host << ':' << finch_server_port(server) << std::endl;
      while (!interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(100));
      finch_server_stop(server);
      std::cerr << "stopped\n";
      return 0;
    }
  } catch (const Failure& f) {
    std::cerr << "error [" << finch_status_name(f.status) << "]: " << f.message;
    if (!f.detail.empty()) std::cerr << " (" << f.detail << ')';
    std::cerr << '\n';
    return exit_code(f.status);
  }
  return 0;
}
