// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "curve.hpp"
#include "distribution.hpp"
#include "effect.hpp"
#include "json.hpp"
#include "subset.hpp"
#include "synth.hpp"
#include "table.hpp"

// JSON encodings shared by the payload, the explain document and the HTTP
// endpoints. Non-finite numbers are written as null.
namespace finch::wire {

using nlohmann::json;

json number(double v);
json numbers(std::span<const double> v);

json feature_meta(const FeatureMeta& meta);
json dataset_info(const Dataset& ds);
json instance(const Dataset& ds, const InstanceVector& inst);
json subset_diagnostics(const Dataset& ds, const SubsetSelection& sel, std::size_t step);
json curve(const DependenceCurve& c);
json aligned_curve(const AlignedCurve& c, std::string_view role, bool with_band);
json decomposition(const EffectDecomposition& d);
json heatmap(const DistributionHeatmap& h);
json ranking(const FeatureRanking& r, double offset);
json pdp_comparison(const PdpComparison& p);

}  // namespace finch::wire
