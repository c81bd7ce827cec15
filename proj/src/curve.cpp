// SPDX-License-Identifier: Apache-2.0
#include "curve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "error.hpp"

namespace finch {

std::string_view to_string(ValueSource source) noexcept {
  return source == ValueSource::truth ? "truth" : "prediction";
}

std::string_view to_string(PointFlag flag) noexcept {
  switch (flag) {
    case PointFlag::observed: return "observed";
    case PointFlag::interpolated: return "interpolated";
    case PointFlag::extrapolated: return "extrapolated";
    case PointFlag::missing: return "missing";
  }
  return "observed";
}

std::string_view to_string(HighlightMode mode) noexcept {
  switch (mode) {
    case HighlightMode::base_vs_mean: return "base_vs_mean";
    case HighlightMode::base_vs_current: return "base_vs_current";
    case HighlightMode::previous_vs_current: return "previous_vs_current";
    case HighlightMode::current_vs_base: return "current_vs_base";
    case HighlightMode::truth_deviation: return "truth_deviation";
    case HighlightMode::interaction: return "interaction";
  }
  return "base_vs_mean";
}

std::optional<HighlightMode> parse_highlight_mode(std::string_view text) noexcept {
  for (auto m : {HighlightMode::base_vs_mean, HighlightMode::base_vs_current,
                 HighlightMode::previous_vs_current, HighlightMode::current_vs_base,
                 HighlightMode::truth_deviation, HighlightMode::interaction})
    if (to_string(m) == text) return m;
  return std::nullopt;
}

// --- curves ---------------------------------------------------------------------

DependenceCurve compute_curve(const Dataset& ds, std::span<const std::size_t> rows,
                              std::size_t x_feature, ColumnRef column,
                              const CurveOptions& options) {
  if (rows.empty()) throw Error(ErrorCode::invalid_argument, "cannot compute a curve over no rows");
  const auto& meta = ds.feature(x_feature);
  const auto& vc = ds.values(column);
  const auto levels = ds.levels(x_feature);
  const auto codes = ds.level_codes(x_feature);
  const auto& values = vc.values;

  std::vector<double> sum(levels.size(), 0.0);
  std::vector<std::size_t> cnt(levels.size(), 0);
  for (const std::size_t r : rows) {
    const auto c = codes[r];
    sum[c] += values[r];
    ++cnt[c];
  }

  DependenceCurve curve;
  curve.x_feature = x_feature;
  curve.x_name = meta.name;
  curve.x_kind = meta.kind;
  curve.source = vc.is_truth ? ValueSource::truth : ValueSource::prediction;
  curve.offset = vc.mean;
  curve.subset_size = rows.size();

  // Dense level -> point slot, then a second pass for squared deviations.
  std::vector<std::uint32_t> slot(levels.size(), 0);
  for (std::size_t l = 0; l < levels.size(); ++l) {
    if (cnt[l] == 0) continue;
    slot[l] = static_cast<std::uint32_t>(curve.x.size());
    curve.x.push_back(levels[l]);
    curve.mean.push_back(sum[l] / static_cast<double>(cnt[l]));
    curve.count.push_back(cnt[l]);
  }
  std::vector<double> ss(curve.x.size(), 0.0);
  for (const std::size_t r : rows) {
    const auto p = slot[codes[r]];
    const double d = values[r] - curve.mean[p];
    ss[p] += d * d;
  }
  curve.dev.resize(curve.x.size());
  for (std::size_t p = 0; p < curve.x.size(); ++p)
    curve.dev[p] = curve.count[p] > 1 ? std::sqrt(ss[p] / static_cast<double>(curve.count[p] - 1)) : 0.0;

  const bool smoothable = options.smoothing && meta.kind == FeatureKind::continuous;
  curve.smoothed = smooth(curve.mean, rows.size(), ds.rows(), smoothable, options.smoothing_config);
  curve.smoothed_dev = smooth(curve.dev, rows.size(), ds.rows(), smoothable, options.smoothing_config);
  return curve;
}

std::size_t smoothing_span(std::size_t points, std::size_t subset_n, std::size_t full_n,
                           const SmoothingConfig& config) {
  const double ratio =
      subset_n == 0 ? 1.0 : static_cast<double>(full_n) / static_cast<double>(subset_n);
  const double raw = std::round(config.span_factor * static_cast<double>(points) *
                                std::sqrt(std::max(ratio, 1.0)));
  const std::size_t lo = config.min_span;
  const std::size_t hi = std::max(config.min_span, points / 2);
  const double clamped = std::clamp(raw, static_cast<double>(lo), static_cast<double>(hi));
  return static_cast<std::size_t>(clamped);
}

std::vector<double> smooth(std::span<const double> values, std::size_t subset_n,
                           std::size_t full_n, bool enabled, const SmoothingConfig& config) {
  std::vector<double> out(values.begin(), values.end());
  const std::size_t p = values.size();
  if (!enabled || p <= config.max_unsmoothed_points) return out;

  const double alpha = 2.0 / (static_cast<double>(smoothing_span(p, subset_n, full_n, config)) + 1.0);
  std::vector<double> fwd(p);
  std::vector<double> bwd(p);
  fwd[0] = values[0];
  for (std::size_t i = 1; i < p; ++i) fwd[i] = alpha * values[i] + (1.0 - alpha) * fwd[i - 1];
  bwd[p - 1] = values[p - 1];
  for (std::size_t i = p - 1; i-- > 0;) bwd[i] = alpha * values[i] + (1.0 - alpha) * bwd[i + 1];
  for (std::size_t i = 0; i < p; ++i) out[i] = 0.5 * (fwd[i] + bwd[i]);
  return out;
}

DependenceCurve without_smoothing(const DependenceCurve& curve) {
  DependenceCurve out = curve;
  out.smoothed = out.mean;
  out.smoothed_dev = out.dev;
  return out;
}

// --- alignment ---------------------------------------------------------------------

namespace {

AlignedCurve resample(const DependenceCurve& c, const std::vector<double>& grid) {
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  const std::size_t g = grid.size();
  AlignedCurve a;
  a.source = c.source;
  a.subset_size = c.subset_size;
  a.mean.assign(g, nan);
  a.smoothed.assign(g, nan);
  a.dev.assign(g, nan);
  a.smoothed_dev.assign(g, nan);
  a.count.assign(g, 0);
  a.flags.assign(g, PointFlag::missing);

  auto copy_point = [&](std::size_t gi, std::size_t ci) {
    a.mean[gi] = c.mean[ci];
    a.smoothed[gi] = c.smoothed[ci];
    a.dev[gi] = c.dev[ci];
    a.smoothed_dev[gi] = c.smoothed_dev[ci];
  };

  std::size_t ci = 0;
  for (std::size_t gi = 0; gi < g; ++gi) {
    const double x = grid[gi];
    while (ci < c.x.size() && c.x[ci] < x) ++ci;
    if (ci < c.x.size() && c.x[ci] == x) {
      copy_point(gi, ci);
      a.count[gi] = c.count[ci];
      a.flags[gi] = PointFlag::observed;
      continue;
    }
    if (c.x_kind == FeatureKind::categorical) continue;  // stays missing
    if (ci == 0) {
      copy_point(gi, 0);
      a.flags[gi] = PointFlag::extrapolated;
    } else if (ci == c.x.size()) {
      copy_point(gi, c.x.size() - 1);
      a.flags[gi] = PointFlag::extrapolated;
    } else {
      const double x0 = c.x[ci - 1];
      const double x1 = c.x[ci];
      const double t = (x - x0) / (x1 - x0);
      auto lerp = [t](double u, double v) { return u + t * (v - u); };
      a.mean[gi] = lerp(c.mean[ci - 1], c.mean[ci]);
      a.smoothed[gi] = lerp(c.smoothed[ci - 1], c.smoothed[ci]);
      a.dev[gi] = lerp(c.dev[ci - 1], c.dev[ci]);
      a.smoothed_dev[gi] = lerp(c.smoothed_dev[ci - 1], c.smoothed_dev[ci]);
      a.flags[gi] = PointFlag::interpolated;
    }
  }
  return a;
}

void check_same_axis(const DependenceCurve& ref, const DependenceCurve& c) {
  if (c.x_feature != ref.x_feature || c.x_name != ref.x_name)
    throw Error(ErrorCode::invalid_argument,
                "cannot align curves over different x features ('" + ref.x_name + "' vs '" +
                    c.x_name + "')");
}

}  // namespace

std::size_t CurveBundle::grid_index_nearest(double x) const {
  if (grid.empty()) throw Error(ErrorCode::invalid_argument, "empty grid");
  const auto it = std::lower_bound(grid.begin(), grid.end(), x);
  if (it == grid.begin()) return 0;
  if (it == grid.end()) return grid.size() - 1;
  const auto hi = static_cast<std::size_t>(it - grid.begin());
  // Exact midpoints go to the lower grid value.
  return (x - grid[hi - 1] <= grid[hi] - x) ? hi - 1 : hi;
}

HighlightMode default_highlight(std::size_t chain_curves) noexcept {
  if (chain_curves <= 1) return HighlightMode::base_vs_mean;
  if (chain_curves == 2) return HighlightMode::base_vs_current;
  return HighlightMode::previous_vs_current;
}

CurveBundle align_curves(std::span<const DependenceCurve> curves, const DependenceCurve* truth) {
  if (curves.empty() || curves.size() > 3)
    throw Error(ErrorCode::invalid_argument, "a bundle holds one to three chain curves");
  const auto& first = curves.front();
  for (const auto& c : curves) check_same_axis(first, c);
  if (truth) check_same_axis(first, *truth);

  CurveBundle b;
  b.x_feature = first.x_feature;
  b.x_name = first.x_name;
  b.x_kind = first.x_kind;
  b.offset = first.offset;
  b.chain_curves = curves.size();

  std::vector<double> grid;
  for (const auto& c : curves) grid.insert(grid.end(), c.x.begin(), c.x.end());
  if (truth) grid.insert(grid.end(), truth->x.begin(), truth->x.end());
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  b.grid = std::move(grid);

  b.base = resample(curves[0], b.grid);
  if (curves.size() == 1) {
    b.current = b.base;
  } else {
    b.current = resample(curves.back(), b.grid);
    if (curves.size() == 3) b.previous = resample(curves[1], b.grid);
  }
  if (truth) b.truth = resample(*truth, b.grid);
  set_highlight(b, default_highlight(b.chain_curves));
  return b;
}

std::vector<double> highlight_series(const CurveBundle& b, HighlightMode mode) {
  const std::size_t g = b.grid.size();
  std::vector<double> out(g);
  auto diff = [&](const std::vector<double>& hi, const std::vector<double>& lo) {
    for (std::size_t i = 0; i < g; ++i) out[i] = hi[i] - lo[i];
  };
  switch (mode) {
    case HighlightMode::base_vs_mean:
      for (std::size_t i = 0; i < g; ++i) out[i] = b.base.smoothed[i] - b.offset;
      break;
    case HighlightMode::base_vs_current:
    case HighlightMode::current_vs_base:
      if (b.chain_curves < 2)
        throw Error(ErrorCode::unavailable, "highlight needs a conditioned curve");
      diff(b.current.smoothed, b.base.smoothed);
      break;
    case HighlightMode::previous_vs_current:
      if (!b.previous) throw Error(ErrorCode::unavailable, "highlight needs a previous curve");
      diff(b.current.smoothed, b.previous->smoothed);
      break;
    case HighlightMode::truth_deviation:
      return truth_deviation(b);
    case HighlightMode::interaction:
      throw Error(ErrorCode::unavailable, "interaction highlight comes from an effect decomposition");
  }
  return out;
}

void set_highlight(CurveBundle& b, HighlightMode mode) {
  b.highlight = highlight_series(b, mode);
  b.mode = mode;
}

std::vector<double> truth_deviation(const CurveBundle& b) {
  if (!b.truth)
    throw Error(ErrorCode::unavailable, "ground-truth view unavailable: no truth column loaded");
  std::vector<double> out(b.grid.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = b.current.smoothed[i] - b.truth->smoothed[i];
  return out;
}

}  // namespace finch
