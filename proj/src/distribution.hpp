// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "table.hpp"

namespace finch {

/// Per-bin density of one feature for the full data and for a subset, each
/// scaled by its own maximum bin count so a small subset stays visible.
struct DistributionHeatmap {
  std::size_t feature = 0;
  std::string name;
  FeatureKind kind = FeatureKind::continuous;
  std::vector<double> bin_edges;   // continuous: bins + 1 edges, last bin closed
  std::vector<double> categories;  // categorical: one bin per category
  std::vector<std::size_t> full_counts;
  std::vector<std::size_t> subset_counts;
  std::vector<double> full_rel;
  std::vector<double> subset_rel;
  std::size_t instance_bin = 0;

  std::size_t bins() const noexcept { return full_counts.size(); }
};

/// Bin index of `value` for the feature's binning. Continuous values outside
/// [min, max] land in the nearest end bin; categorical values map to the
/// nearest category.
std::size_t locate_bin(const DistributionHeatmap& heatmap, double value);

/// Throws invalid_argument for an empty subset.
DistributionHeatmap feature_distribution(const Dataset& ds, std::span<const std::size_t> subset,
                                         std::size_t feature, const InstanceVector& inst,
                                         std::size_t bins = 20);

}  // namespace finch
