// SPDX-License-Identifier: Apache-2.0
#include "config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "error.hpp"
#include "json.hpp"

namespace finch {
namespace {

using nlohmann::json;

template <typename T>
void read_key(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) {
    try {
      out = it->get<T>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::invalid_argument,
                  std::string("config key '") + key + "' has the wrong type", e.what());
    }
  }
}

}  // namespace

Config Config::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::parse, "config is not valid JSON", e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::invalid_argument, "config must be a JSON object");

  static const char* known[] = {"subset_fraction",       "subset_min_rows",
                                "near_identical_per_feature", "smoothing_span_factor",
                                "smoothing_min_span",    "smoothing_max_unsmoothed_points",
                                "categorical_max_unique", "heatmap_bins",
                                "threads"};
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw Error(ErrorCode::invalid_argument, "unknown config key '" + key + "'");
  }

  Config c;
  read_key(j, "subset_fraction", c.subset.fraction);
  read_key(j, "subset_min_rows", c.subset.min_rows);
  read_key(j, "near_identical_per_feature", c.subset.near_identical_per_feature);
  read_key(j, "smoothing_span_factor", c.smoothing.span_factor);
  read_key(j, "smoothing_min_span", c.smoothing.min_span);
  read_key(j, "smoothing_max_unsmoothed_points", c.smoothing.max_unsmoothed_points);
  read_key(j, "categorical_max_unique", c.categorical_max_unique);
  read_key(j, "heatmap_bins", c.heatmap_bins);
  read_key(j, "threads", c.threads);

  if (!(c.subset.fraction >= 0.0 && c.subset.fraction <= 1.0))
    throw Error(ErrorCode::invalid_argument, "subset_fraction must lie in [0,1]");
  if (!(c.subset.near_identical_per_feature >= 0.0))
    throw Error(ErrorCode::invalid_argument, "near_identical_per_feature must be >= 0");
  if (c.heatmap_bins == 0) throw Error(ErrorCode::invalid_argument, "heatmap_bins must be >= 1");
  if (c.smoothing.min_span == 0)
    throw Error(ErrorCode::invalid_argument, "smoothing_min_span must be >= 1");
  return c;
}

Config Config::from_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

Config Config::from_environment() {
  const char* path = std::getenv("FINCH_CONFIG");
  if (path == nullptr || *path == '\0') return Config{};
  return from_file(path);
}

std::string Config::to_json_text() const {
  json j = {
      {"subset_fraction", subset.fraction},
      {"subset_min_rows", subset.min_rows},
      {"near_identical_per_feature", subset.near_identical_per_feature},
      {"smoothing_span_factor", smoothing.span_factor},
      {"smoothing_min_span", smoothing.min_span},
      {"smoothing_max_unsmoothed_points", smoothing.max_unsmoothed_points},
      {"categorical_max_unique", categorical_max_unique},
      {"heatmap_bins", heatmap_bins},
      {"threads", threads},
  };
  return j.dump();
}

std::size_t Config::effective_threads() const {
  if (threads != 0) return threads;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

}  // namespace finch
