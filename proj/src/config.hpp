// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>

namespace finch {

struct SubsetConfig {
  double fraction = 0.05;             // share of the most similar rows always kept
  std::size_t min_rows = 50;          // absolute floor on subset size
  double near_identical_per_feature = 0.1;
};

struct SmoothingConfig {
  double span_factor = 0.1;
  std::size_t min_span = 3;
  std::size_t max_unsmoothed_points = 24;
};

/// Heuristic constants. Defaults are the values the engine was designed
/// around; a JSON file named by FINCH_CONFIG may override any of them.
struct Config {
  SubsetConfig subset;
  SmoothingConfig smoothing;
  std::size_t categorical_max_unique = 24;
  std::size_t heatmap_bins = 20;
  std::size_t threads = 0;  // 0 = hardware concurrency

  static Config from_json_text(const std::string& text);
  static Config from_file(const std::string& path);
  /// Defaults, overridden by $FINCH_CONFIG when set.
  static Config from_environment();

  std::string to_json_text() const;
  std::size_t effective_threads() const;
};

}  // namespace finch
