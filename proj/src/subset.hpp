// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "config.hpp"
#include "table.hpp"

namespace finch {

struct SubsetThresholds {
  std::size_t pct_count = 0;         // ceil(fraction * N)
  std::size_t min_count = 0;         // min(N, min_rows)
  double near_identical_cutoff = 0;  // per-feature cutoff * |features|
};

/// Rows conditioning one curve. `rows` is ascending; `distances[i]` belongs to
/// `rows[i]`.
struct SubsetSelection {
  std::vector<std::size_t> rows;
  std::vector<double> distances;
  std::vector<std::size_t> features;  // similarity features, chain order
  SubsetThresholds thresholds;
  std::size_t near_identical_count = 0;

  std::size_t size() const noexcept { return rows.size(); }
};

/// Euclidean distance over the normalized values of `features`. The instance
/// value is normalized with clamping, so custom values beyond the observed
/// range sit on the boundary.
double instance_distance(const Dataset& ds, const InstanceVector& inst, std::size_t row,
                         std::span<const std::size_t> features);
double instance_distance(const Dataset& ds, const InstanceVector& inst, std::size_t row,
                         const std::vector<std::string>& features);

/// Every row index, ascending.
std::vector<std::size_t> all_rows(const Dataset& ds);

/// Union of: the ceil(fraction*N) nearest rows, the min(N, min_rows) nearest
/// rows, and every row within the near-identical cutoff. Ties at the frontier
/// go to the lower row index. An empty feature list selects every row.
SubsetSelection select_subset(const Dataset& ds, std::span<const std::size_t> features,
                              const InstanceVector& inst, const SubsetConfig& config = {});

/// Ordered conditioning features for one x-axis feature. Step k holds the
/// selection over the first k conditioning features; step 0 is the full data.
/// Steps are shared between chains, so copies are cheap.
class SubsetChain {
 public:
  SubsetChain(const Dataset& ds, std::size_t x_feature, InstanceVector instance,
              SubsetConfig config = {});

  std::size_t x_feature() const noexcept { return x_feature_; }
  const std::vector<std::size_t>& conditioning() const noexcept { return conditioning_; }
  std::size_t length() const noexcept { return conditioning_.size(); }
  const InstanceVector& instance() const noexcept { return instance_; }
  const SubsetConfig& config() const noexcept { return config_; }

  std::size_t step_count() const noexcept { return steps_.size(); }
  const SubsetSelection& step(std::size_t k) const { return *steps_.at(k); }
  std::shared_ptr<const SubsetSelection> step_ptr(std::size_t k) const { return steps_.at(k); }
  const SubsetSelection& last() const { return *steps_.back(); }

  bool contains(std::size_t feature) const noexcept;

  friend SubsetChain extend_chain(const Dataset&, const SubsetChain&, std::size_t);
  friend SubsetChain pop_chain(const SubsetChain&);
  friend bool operator==(const SubsetChain& a, const SubsetChain& b) {
    return a.x_feature_ == b.x_feature_ && a.conditioning_ == b.conditioning_ &&
           a.steps_ == b.steps_ && a.instance_ == b.instance_;
  }

 private:
  SubsetChain() = default;

  std::size_t x_feature_ = 0;
  std::vector<std::size_t> conditioning_;
  std::vector<std::shared_ptr<const SubsetSelection>> steps_;
  InstanceVector instance_;
  SubsetConfig config_;
};

/// Appends `feature` and selects the new step from the full dataset using
/// joint similarity over every conditioning feature. Throws chain error for the
/// x feature or a duplicate.
SubsetChain extend_chain(const Dataset& ds, const SubsetChain& chain, std::size_t feature);
SubsetChain extend_chain(const Dataset& ds, const SubsetChain& chain, std::string_view feature);
/// Drops the last conditioning feature. Throws chain error on an empty chain.
SubsetChain pop_chain(const SubsetChain& chain);

}  // namespace finch
