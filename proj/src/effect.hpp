// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "config.hpp"
#include "curve.hpp"
#include "subset.hpp"
#include "table.hpp"

namespace finch {

/// Which aligned series a decomposition is taken over.
enum class EffectSeries { raw, display };

/// Splits the change from the reference curve to the current one into a
/// constant main effect and a residual interaction series:
///   current = reference + main_effect + interaction   (pointwise, exact)
struct EffectDecomposition {
  std::size_t feature = 0;
  std::string feature_name;
  double main_effect = 0.0;
  EffectSeries series = EffectSeries::display;
  std::vector<double> grid;
  std::vector<double> main_line;    // reference + main_effect
  std::vector<double> interaction;  // residual
  double instance_x = 0.0;
  std::size_t instance_index = 0;  // grid point the score is read at
  double instance_x_score = 0.0;   // |interaction| there
};

/// mean(column over the subset selected by `feature` alone) - c.
double main_effect(const Dataset& ds, std::size_t feature, const InstanceVector& inst,
                   ColumnRef column, const SubsetConfig& config = {});

/// Throws unavailable for a single-curve bundle (no reference to decompose
/// against).
EffectDecomposition interaction_series(const CurveBundle& bundle, double main_effect,
                                       std::size_t feature, std::string feature_name,
                                       double instance_x,
                                       EffectSeries series = EffectSeries::display);

/// Switches the bundle's highlight to the interaction residual.
void apply_interaction_highlight(CurveBundle& bundle, const EffectDecomposition& decomposition);

enum class ScoreKind { interaction_at_instance, total_change_at_instance };

std::string_view to_string(ScoreKind kind) noexcept;
std::optional<ScoreKind> parse_score_kind(std::string_view text) noexcept;

struct RankingEntry {
  std::size_t feature = 0;
  std::string name;
  double score = 0.0;
  DependenceCurve preview;  // candidate's conditioned curve
  EffectDecomposition decomposition;
};

struct FeatureRanking {
  ScoreKind kind = ScoreKind::interaction_at_instance;
  std::vector<RankingEntry> entries;  // score descending, ties by name
};

/// Evaluates every feature outside the chain as the next conditioning step.
/// Scores are read from raw (unsmoothed) means. Candidates run on
/// `config.effective_threads()` workers; the result is schedule-independent.
FeatureRanking rank_next_features(const Dataset& ds, const SubsetChain& chain, ColumnRef column,
                                  ScoreKind kind, const Config& config = {});

}  // namespace finch
