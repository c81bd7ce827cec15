// SPDX-License-Identifier: Apache-2.0
#include "distribution.hpp"

#include <algorithm>
#include <cmath>

#include "error.hpp"

namespace finch {
namespace {

std::vector<double> relative(const std::vector<std::size_t>& counts) {
  const std::size_t top = counts.empty() ? 0 : *std::max_element(counts.begin(), counts.end());
  std::vector<double> out(counts.size(), 0.0);
  if (top == 0) return out;
  for (std::size_t i = 0; i < counts.size(); ++i)
    out[i] = static_cast<double>(counts[i]) / static_cast<double>(top);
  return out;
}

}  // namespace

std::size_t locate_bin(const DistributionHeatmap& h, double value) {
  if (h.kind == FeatureKind::categorical) {
    const auto& cats = h.categories;
    const auto it = std::lower_bound(cats.begin(), cats.end(), value);
    if (it == cats.begin()) return 0;
    if (it == cats.end()) return cats.size() - 1;
    const auto hi = static_cast<std::size_t>(it - cats.begin());
    return (value - cats[hi - 1] <= cats[hi] - value) ? hi - 1 : hi;
  }
  const auto& e = h.bin_edges;
  const std::size_t bins = e.size() - 1;
  if (!(value > e.front())) return 0;
  if (value >= e.back()) return bins - 1;
  const double width = e.back() - e.front();
  auto b = static_cast<std::size_t>(std::floor((value - e.front()) / width * static_cast<double>(bins)));
  b = std::min(b, bins - 1);
  // Settle against the stored edges so membership in [e[b], e[b+1]) is exact.
  while (b > 0 && value < e[b]) --b;
  while (b + 1 < bins && value >= e[b + 1]) ++b;
  return b;
}

DistributionHeatmap feature_distribution(const Dataset& ds, std::span<const std::size_t> subset,
                                         std::size_t feature, const InstanceVector& inst,
                                         std::size_t bins) {
  if (subset.empty()) throw Error(ErrorCode::invalid_argument, "distribution of an empty subset");
  if (bins == 0) throw Error(ErrorCode::invalid_argument, "distribution needs at least one bin");
  const auto& meta = ds.feature(feature);
  const auto col = ds.column(feature);

  DistributionHeatmap h;
  h.feature = feature;
  h.name = meta.name;
  h.kind = meta.kind;

  std::vector<std::size_t> bin_of_row(ds.rows());
  if (meta.kind == FeatureKind::categorical) {
    h.categories = meta.categories;
    const auto codes = ds.level_codes(feature);
    for (std::size_t r = 0; r < ds.rows(); ++r) bin_of_row[r] = codes[r];
  } else {
    h.bin_edges.resize(bins + 1);
    const double width = meta.max - meta.min;
    for (std::size_t i = 0; i <= bins; ++i)
      h.bin_edges[i] = meta.min + width * static_cast<double>(i) / static_cast<double>(bins);
    h.bin_edges.back() = meta.max;
    for (std::size_t r = 0; r < ds.rows(); ++r) bin_of_row[r] = locate_bin(h, col[r]);
  }

  const std::size_t nbins = meta.kind == FeatureKind::categorical ? h.categories.size() : bins;
  h.full_counts.assign(nbins, 0);
  h.subset_counts.assign(nbins, 0);
  for (std::size_t r = 0; r < ds.rows(); ++r) ++h.full_counts[bin_of_row[r]];
  for (const std::size_t r : subset) {
    if (r >= ds.rows()) throw Error(ErrorCode::invalid_argument, "subset row out of range");
    ++h.subset_counts[bin_of_row[r]];
  }
  h.full_rel = relative(h.full_counts);
  h.subset_rel = relative(h.subset_counts);
  h.instance_bin = locate_bin(h, inst.values.at(feature));
  return h;
}

}  // namespace finch
