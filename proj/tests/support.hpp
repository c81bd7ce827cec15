// SPDX-License-Identifier: Apache-2.0
// Test helpers and independent oracles. Nothing here calls engine internals
// beyond loading tables, so oracle results can be compared against the engine.
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "table.hpp"
#include "tempdir.hpp"

namespace testing {

inline finch::Dataset csv_dataset(const std::string& csv, const std::string& roles,
                                  const finch::Config& config = {}) {
  std::istringstream in(csv);
  return finch::load_table(in, finch::Schema::from_assignments(roles), config);
}

/// Rows of continuous features drawn U(0,1) (distinct with probability 1) plus
/// a prediction column from `f`.
template <class F>
std::string random_csv(std::mt19937_64& rng, std::size_t n, std::size_t features, F f) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::ostringstream out;
  out.precision(17);
  for (std::size_t k = 0; k < features; ++k) out << 'f' << k << ',';
  out << "y\n";
  std::vector<double> row(features);
  for (std::size_t r = 0; r < n; ++r) {
    for (auto& v : row) v = u(rng);
    for (const double v : row) out << v << ',';
    out << f(row) << '\n';
  }
  return out.str();
}

inline std::string feature_roles(std::size_t features) {
  std::string roles;
  for (std::size_t k = 0; k < features; ++k) roles += "f" + std::to_string(k) + "=feature,";
  return roles + "y=prediction";
}

/// Brute-force subset rule: sort every row by (distance, index) and take the
/// union of the three criteria.
struct OracleSubset {
  std::set<std::size_t> rows;
  std::vector<double> distance;  // per dataset row
};

inline OracleSubset oracle_subset(const finch::Dataset& ds, const std::vector<std::size_t>& features,
                                  const std::vector<double>& instance, double fraction = 0.05,
                                  std::size_t min_rows = 50, double per_feature = 0.1) {
  const std::size_t n = ds.rows();
  OracleSubset out;
  out.distance.assign(n, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    double s = 0.0;
    for (const auto f : features) {
      const auto& m = ds.feature(f);
      const double span = m.max - m.min;
      const double a = span > 0 ? (ds.column(f)[r] - m.min) / span : 0.0;
      const double b = span > 0 ? std::clamp((instance[f] - m.min) / span, 0.0, 1.0) : 0.0;
      s += (a - b) * (a - b);
    }
    out.distance[r] = std::sqrt(s);
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return out.distance[a] < out.distance[b]; });
  // Exact integer ceiling of fraction * n for the fractions used in tests.
  const auto pct = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
  const std::size_t keep = std::max(pct, std::min(n, min_rows));
  for (std::size_t i = 0; i < keep; ++i) out.rows.insert(order[i]);
  const double cutoff = per_feature * static_cast<double>(features.size());
  for (std::size_t r = 0; r < n; ++r)
    if (out.distance[r] <= cutoff + 1e-12) out.rows.insert(r);
  return out;
}

/// Group means of `values` by exact x over `rows`.
inline std::map<double, double> oracle_group_means(std::span<const double> x,
                                                   std::span<const double> values,
                                                   const std::vector<std::size_t>& rows) {
  std::map<double, std::pair<double, std::size_t>> acc;
  for (const auto r : rows) {
    auto& [s, c] = acc[x[r]];
    s += values[r];
    ++c;
  }
  std::map<double, double> out;
  for (const auto& [k, v] : acc) out[k] = v.first / static_cast<double>(v.second);
  return out;
}

}  // namespace testing
