// SPDX-License-Identifier: Apache-2.0
#include "subset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "error.hpp"

namespace finch {
namespace {

// ceil(fraction * n) without letting representation error in `fraction`
// push an exact product up by one.
std::size_t ceil_share(double fraction, std::size_t n) {
  const double r = fraction * static_cast<double>(n);
  const double nearest = std::round(r);
  if (std::abs(r - nearest) <= 1e-9 * std::max(1.0, r)) return static_cast<std::size_t>(nearest);
  return static_cast<std::size_t>(std::ceil(r));
}

std::vector<double> normalized_instance(const Dataset& ds, const InstanceVector& inst,
                                        std::span<const std::size_t> features) {
  std::vector<double> out(features.size());
  for (std::size_t i = 0; i < features.size(); ++i)
    out[i] = ds.feature(features[i]).normalize(inst.values.at(features[i]));
  return out;
}

std::vector<std::size_t> feature_indices(const Dataset& ds, const std::vector<std::string>& names) {
  std::vector<std::size_t> out;
  out.reserve(names.size());
  for (const auto& n : names) out.push_back(ds.feature_index(n));
  return out;
}

}  // namespace

double instance_distance(const Dataset& ds, const InstanceVector& inst, std::size_t row,
                         std::span<const std::size_t> features) {
  if (features.empty())
    throw Error(ErrorCode::invalid_argument, "distance needs at least one feature");
  if (row >= ds.rows()) throw Error(ErrorCode::not_found, "row out of range");
  double sum = 0.0;
  for (const std::size_t f : features) {
    const double d = ds.normalized(f)[row] - ds.feature(f).normalize(inst.values.at(f));
    sum += d * d;
  }
  return std::sqrt(sum);
}

double instance_distance(const Dataset& ds, const InstanceVector& inst, std::size_t row,
                         const std::vector<std::string>& features) {
  const auto idx = feature_indices(ds, features);
  return instance_distance(ds, inst, row, idx);
}

std::vector<std::size_t> all_rows(const Dataset& ds) {
  std::vector<std::size_t> rows(ds.rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return rows;
}

SubsetSelection select_subset(const Dataset& ds, std::span<const std::size_t> features,
                              const InstanceVector& inst, const SubsetConfig& config) {
  const std::size_t n = ds.rows();
  SubsetSelection sel;
  sel.features.assign(features.begin(), features.end());
  sel.thresholds.pct_count = std::min(n, ceil_share(config.fraction, n));
  sel.thresholds.min_count = std::min(n, config.min_rows);
  sel.thresholds.near_identical_cutoff =
      config.near_identical_per_feature * static_cast<double>(features.size());

  if (features.empty()) {
    sel.rows.resize(n);
    std::iota(sel.rows.begin(), sel.rows.end(), std::size_t{0});
    sel.distances.assign(n, 0.0);
    sel.near_identical_count = n;
    return sel;
  }
  for (const std::size_t f : features)
    if (f >= ds.feature_count()) throw Error(ErrorCode::not_found, "feature index out of range");

  const auto target = normalized_instance(ds, inst, features);
  std::vector<double> sq(n, 0.0);
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto col = ds.normalized(features[i]);
    const double t = target[i];
    for (std::size_t r = 0; r < n; ++r) {
      const double d = col[r] - t;
      sq[r] += d * d;
    }
  }
  std::vector<double> dist(n);
  for (std::size_t r = 0; r < n; ++r) dist[r] = std::sqrt(sq[r]);

  // Absorb rounding in the normalized values so an exact per-feature gap of
  // 0.1 still counts as near-identical.
  const double cutoff = sel.thresholds.near_identical_cutoff * (1.0 + 1e-12) + 1e-15;
  const std::size_t k = std::max(sel.thresholds.pct_count, sel.thresholds.min_count);

  // Frontier: the k-th smallest (distance, row) pair.
  std::size_t frontier_row = n;
  double frontier_dist = -1.0;
  if (k > 0) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto less = [&](std::size_t a, std::size_t b) {
      return dist[a] < dist[b] || (dist[a] == dist[b] && a < b);
    };
    std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k - 1), order.end(),
                     less);
    frontier_row = order[k - 1];
    frontier_dist = dist[frontier_row];
  }

  sel.rows.reserve(k);
  sel.distances.reserve(k);
  for (std::size_t r = 0; r < n; ++r) {
    const bool near = dist[r] <= cutoff;
    const bool nearest_k =
        k > 0 && (dist[r] < frontier_dist || (dist[r] == frontier_dist && r <= frontier_row));
    if (near) ++sel.near_identical_count;
    if (near || nearest_k) {
      sel.rows.push_back(r);
      sel.distances.push_back(dist[r]);
    }
  }
  return sel;
}

// --- chain --------------------------------------------------------------------------

SubsetChain::SubsetChain(const Dataset& ds, std::size_t x_feature, InstanceVector instance,
                         SubsetConfig config)
    : x_feature_(x_feature), instance_(std::move(instance)), config_(config) {
  if (x_feature >= ds.feature_count())
    throw Error(ErrorCode::not_found, "x feature index out of range");
  if (instance_.values.size() != ds.feature_count())
    throw Error(ErrorCode::invalid_argument, "instance does not match the dataset's features");
  steps_.push_back(std::make_shared<const SubsetSelection>(
      select_subset(ds, std::span<const std::size_t>{}, instance_, config_)));
}

bool SubsetChain::contains(std::size_t feature) const noexcept {
  return std::find(conditioning_.begin(), conditioning_.end(), feature) != conditioning_.end();
}

SubsetChain extend_chain(const Dataset& ds, const SubsetChain& chain, std::size_t feature) {
  if (feature >= ds.feature_count()) throw Error(ErrorCode::not_found, "feature index out of range");
  const auto& name = ds.feature(feature).name;
  if (feature == chain.x_feature_)
    throw Error(ErrorCode::chain, "'" + name + "' is the x-axis feature and cannot condition the chain");
  if (chain.contains(feature))
    throw Error(ErrorCode::chain, "'" + name + "' is already in the chain");
  SubsetChain next = chain;
  next.conditioning_.push_back(feature);
  next.steps_.push_back(std::make_shared<const SubsetSelection>(
      select_subset(ds, next.conditioning_, next.instance_, next.config_)));
  return next;
}

SubsetChain extend_chain(const Dataset& ds, const SubsetChain& chain, std::string_view feature) {
  return extend_chain(ds, chain, ds.feature_index(feature));
}

SubsetChain pop_chain(const SubsetChain& chain) {
  if (chain.conditioning_.empty()) throw Error(ErrorCode::chain, "chain has no feature to remove");
  SubsetChain prev = chain;
  prev.conditioning_.pop_back();
  prev.steps_.pop_back();
  return prev;
}

}  // namespace finch
