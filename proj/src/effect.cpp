// SPDX-License-Identifier: Apache-2.0
#include "effect.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "error.hpp"

namespace finch {
namespace {

const std::vector<double>& pick(const AlignedCurve& c, EffectSeries s) {
  return s == EffectSeries::raw ? c.mean : c.smoothed;
}

// Nearest grid index to `start` whose value is finite; categorical curves may
// be missing at the instance's own category.
std::optional<std::size_t> nearest_finite(const std::vector<double>& grid,
                                          const std::vector<double>& v, std::size_t start,
                                          double x) {
  if (std::isfinite(v[start])) return start;
  std::optional<std::size_t> best;
  double best_gap = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) continue;
    const double gap = std::abs(grid[i] - x);
    if (!best || gap < best_gap) {
      best = i;
      best_gap = gap;
    }
  }
  return best;
}

}  // namespace

std::string_view to_string(ScoreKind kind) noexcept {
  return kind == ScoreKind::interaction_at_instance ? "interaction_at_instance"
                                                     : "total_change_at_instance";
}

std::optional<ScoreKind> parse_score_kind(std::string_view text) noexcept {
  if (text == "interaction_at_instance" || text == "interaction")
    return ScoreKind::interaction_at_instance;
  if (text == "total_change_at_instance" || text == "total_change")
    return ScoreKind::total_change_at_instance;
  return std::nullopt;
}

double main_effect(const Dataset& ds, std::size_t feature, const InstanceVector& inst,
                   ColumnRef column, const SubsetConfig& config) {
  const std::size_t only[] = {feature};
  const auto sel = select_subset(ds, only, inst, config);
  const auto& values = ds.values(column).values;
  double sum = 0.0;
  for (const std::size_t r : sel.rows) sum += values[r];
  return sum / static_cast<double>(sel.rows.size()) - ds.global_mean(column);
}

EffectDecomposition interaction_series(const CurveBundle& bundle, double main_effect,
                                       std::size_t feature, std::string feature_name,
                                       double instance_x, EffectSeries series) {
  if (bundle.chain_curves < 2)
    throw Error(ErrorCode::unavailable,
                "effect decomposition is undefined without a conditioning feature");
  const auto& ref = pick(bundle.reference(), series);
  const auto& cur = pick(bundle.current, series);

  EffectDecomposition d;
  d.feature = feature;
  d.feature_name = std::move(feature_name);
  d.main_effect = main_effect;
  d.series = series;
  d.grid = bundle.grid;
  d.instance_x = instance_x;
  const std::size_t g = bundle.grid.size();
  d.main_line.resize(g);
  d.interaction.resize(g);
  for (std::size_t i = 0; i < g; ++i) {
    d.main_line[i] = ref[i] + main_effect;
    d.interaction[i] = cur[i] - ref[i] - main_effect;
  }
  const auto at = bundle.grid_index_nearest(instance_x);
  d.instance_index = nearest_finite(bundle.grid, d.interaction, at, instance_x).value_or(at);
  const double gi = d.interaction[d.instance_index];
  d.instance_x_score = std::isfinite(gi) ? std::abs(gi) : 0.0;
  return d;
}

void apply_interaction_highlight(CurveBundle& bundle, const EffectDecomposition& d) {
  if (d.grid != bundle.grid)
    throw Error(ErrorCode::invalid_argument, "decomposition was computed on a different grid");
  bundle.highlight = d.interaction;
  bundle.mode = HighlightMode::interaction;
}

FeatureRanking rank_next_features(const Dataset& ds, const SubsetChain& chain, ColumnRef column,
                                  ScoreKind kind, const Config& config) {
  FeatureRanking ranking;
  ranking.kind = kind;

  std::vector<std::size_t> candidates;
  for (std::size_t f = 0; f < ds.feature_count(); ++f)
    if (f != chain.x_feature() && !chain.contains(f)) candidates.push_back(f);
  if (candidates.empty()) return ranking;

  const CurveOptions opts{true, config.smoothing};
  const std::size_t x = chain.x_feature();
  const double instance_x = chain.instance().values.at(x);
  const DependenceCurve base = compute_curve(ds, chain.step(0).rows, x, column, opts);
  std::optional<DependenceCurve> reference;
  if (chain.length() > 0) reference = compute_curve(ds, chain.last().rows, x, column, opts);

  std::vector<std::optional<RankingEntry>> slots(candidates.size());
  auto evaluate = [&](std::size_t i) {
    const std::size_t z = candidates[i];
    const SubsetChain extended = extend_chain(ds, chain, z);
    RankingEntry e;
    e.feature = z;
    e.name = ds.feature(z).name;
    e.preview = compute_curve(ds, extended.last().rows, x, column, opts);

    std::vector<DependenceCurve> members{base};
    if (reference) members.push_back(*reference);
    members.push_back(e.preview);
    const CurveBundle bundle = align_curves(members);

    const double a = main_effect(ds, z, chain.instance(), column, chain.config());
    e.decomposition = interaction_series(bundle, a, z, e.name, instance_x, EffectSeries::raw);
    if (kind == ScoreKind::interaction_at_instance) {
      e.score = e.decomposition.instance_x_score;
    } else {
      std::vector<double> change(bundle.grid.size());
      for (std::size_t k = 0; k < change.size(); ++k)
        change[k] = bundle.current.mean[k] - bundle.reference().mean[k];
      const auto at = bundle.grid_index_nearest(instance_x);
      const auto idx = nearest_finite(bundle.grid, change, at, instance_x);
      e.score = idx ? std::abs(change[*idx]) : 0.0;
    }
    slots[i] = std::move(e);
  };

  const std::size_t workers = std::min(config.effective_threads(), candidates.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < candidates.size(); ++i) evaluate(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < candidates.size(); i = next++) {
          try {
            evaluate(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    pool.clear();
    if (failure) std::rethrow_exception(failure);
  }

  ranking.entries.reserve(slots.size());
  for (auto& s : slots) ranking.entries.push_back(std::move(*s));
  std::sort(ranking.entries.begin(), ranking.entries.end(),
            [](const RankingEntry& a, const RankingEntry& b) {
              if (a.score != b.score) return a.score > b.score;
              return a.name < b.name;
            });
  return ranking;
}

}  // namespace finch
