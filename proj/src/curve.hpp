// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "config.hpp"
#include "table.hpp"

namespace finch {

enum class ValueSource { prediction, truth };

std::string_view to_string(ValueSource source) noexcept;

/// Mean of a value column grouped by exact x value over a row subset.
/// Statistics (mean, dev, count) always come from observed rows; `smoothed`
/// and `smoothed_dev` are the display series.
struct DependenceCurve {
  std::size_t x_feature = 0;
  std::string x_name;
  FeatureKind x_kind = FeatureKind::continuous;
  ValueSource source = ValueSource::prediction;
  double offset = 0.0;  // centering constant c
  std::size_t subset_size = 0;

  std::vector<double> x;
  std::vector<double> mean;
  std::vector<double> smoothed;
  std::vector<double> dev;  // sample standard deviation, 0 for singleton groups
  std::vector<double> smoothed_dev;
  std::vector<std::size_t> count;

  std::size_t size() const noexcept { return x.size(); }
};

struct CurveOptions {
  bool smoothing = true;
  SmoothingConfig smoothing_config;
};

/// Throws invalid_argument for an empty row set.
DependenceCurve compute_curve(const Dataset& ds, std::span<const std::size_t> rows,
                              std::size_t x_feature, ColumnRef column,
                              const CurveOptions& options = {});

/// Span of the exponential window for `points` distinct x values. Smaller
/// subsets relative to the full data get a wider window.
std::size_t smoothing_span(std::size_t points, std::size_t subset_n, std::size_t full_n,
                           const SmoothingConfig& config = {});

/// Forward and backward exponentially weighted passes, averaged. Identity when
/// disabled or when the series is short enough to be treated as categorical.
std::vector<double> smooth(std::span<const double> values, std::size_t subset_n,
                           std::size_t full_n, bool enabled, const SmoothingConfig& config = {});

/// Copy with the display series reset to the raw statistics.
DependenceCurve without_smoothing(const DependenceCurve& curve);

// --- alignment ---------------------------------------------------------------

enum class PointFlag : std::uint8_t {
  observed,      // x value present in the curve's own support
  interpolated,  // between two observed values (continuous only)
  extrapolated,  // outside the support, held constant (continuous only)
  missing,       // category absent from the subset (values are NaN)
};

std::string_view to_string(PointFlag flag) noexcept;

struct AlignedCurve {
  ValueSource source = ValueSource::prediction;
  std::size_t subset_size = 0;
  std::vector<double> mean;
  std::vector<double> smoothed;
  std::vector<double> dev;
  std::vector<double> smoothed_dev;
  std::vector<std::size_t> count;  // 0 off support
  std::vector<PointFlag> flags;
};

enum class HighlightMode {
  base_vs_mean,
  base_vs_current,
  previous_vs_current,
  current_vs_base,
  truth_deviation,
  interaction,
};

std::string_view to_string(HighlightMode mode) noexcept;
std::optional<HighlightMode> parse_highlight_mode(std::string_view text) noexcept;

/// Curves of one chain resampled onto a shared grid. `base` is always step 0;
/// `previous` exists only when three chain curves are shown; with a single
/// curve, `current` equals `base`.
struct CurveBundle {
  std::size_t x_feature = 0;
  std::string x_name;
  FeatureKind x_kind = FeatureKind::continuous;
  double offset = 0.0;
  std::size_t chain_curves = 1;

  std::vector<double> grid;
  AlignedCurve base;
  std::optional<AlignedCurve> previous;
  AlignedCurve current;
  std::optional<AlignedCurve> truth;

  HighlightMode mode = HighlightMode::base_vs_mean;
  std::vector<double> highlight;

  /// The curve the current one is compared against: previous, else base.
  const AlignedCurve& reference() const noexcept { return previous ? *previous : base; }
  std::size_t grid_index_nearest(double x) const;
};

/// `curves` lists the chain curves by role: [base], [base, current] or
/// [base, previous, current]. The grid is the union of member x values
/// (including the optional truth curve). Sets the default highlight.
CurveBundle align_curves(std::span<const DependenceCurve> curves,
                         const DependenceCurve* truth = nullptr);

HighlightMode default_highlight(std::size_t chain_curves) noexcept;

/// Pointwise difference named by `mode` over the display series. Throws
/// unavailable when the mode needs a curve the bundle lacks; interaction mode
/// is produced by the effect engine and is rejected here.
std::vector<double> highlight_series(const CurveBundle& bundle, HighlightMode mode);
void set_highlight(CurveBundle& bundle, HighlightMode mode);

/// current - truth on the shared grid; positive where the model predicts above
/// the ground truth.
std::vector<double> truth_deviation(const CurveBundle& bundle);

}  // namespace finch
