// SPDX-License-Identifier: Apache-2.0
#include "serialize.hpp"

#include <algorithm>
#include <cmath>

namespace finch::wire {

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json numbers(std::span<const double> v) {
  json out = json::array();
  for (const double x : v) out.push_back(number(x));
  return out;
}

json feature_meta(const FeatureMeta& m) {
  json j = {
      {"name", m.name},
      {"kind", to_string(m.kind)},
      {"unique_count", m.unique_count},
      {"min", m.min},
      {"max", m.max},
      {"mean", m.mean},
  };
  if (m.kind == FeatureKind::categorical) j["categories"] = m.categories;
  return j;
}

json dataset_info(const Dataset& ds) {
  json features = json::array();
  for (const auto& f : ds.features()) features.push_back(feature_meta(f));
  json targets = json::array();
  for (const auto ref : ds.prediction_columns()) {
    const auto& vc = ds.values(ref);
    targets.push_back({{"label", vc.label}, {"column", vc.name}, {"mean", vc.mean}});
  }
  json j = {
      {"rows", ds.rows()},
      {"rejected_rows", ds.rejected_rows()},
      {"features", features},
      {"target_options", targets},
      {"classification", ds.prediction_columns().size() > 1},
  };
  if (auto t = ds.truth_column())
    j["truth_column"] = ds.values(*t).name;
  else
    j["truth_column"] = nullptr;
  return j;
}

json instance(const Dataset& ds, const InstanceVector& inst) {
  json values = json::object();
  for (std::size_t f = 0; f < ds.feature_count(); ++f) values[ds.feature(f).name] = inst.values[f];
  json j = {
      {"values", values},
      {"imputed_features", json(std::vector<std::string>(inst.imputed_features.begin(),
                                                         inst.imputed_features.end()))},
  };
  if (inst.source_row)
    j["source_row"] = *inst.source_row;
  else
    j["source_row"] = nullptr;
  return j;
}

json subset_diagnostics(const Dataset& ds, const SubsetSelection& sel, std::size_t step) {
  std::vector<std::string> names;
  for (const auto f : sel.features) names.push_back(ds.feature(f).name);
  const double max_d =
      sel.distances.empty() ? 0.0 : *std::max_element(sel.distances.begin(), sel.distances.end());
  return {
      {"step", step},
      {"features", names},
      {"size", sel.size()},
      {"near_identical", sel.near_identical_count},
      {"max_distance", max_d},
      {"thresholds",
       {{"pct_count", sel.thresholds.pct_count},
        {"min_count", sel.thresholds.min_count},
        {"near_identical_cutoff", sel.thresholds.near_identical_cutoff}}},
  };
}

json curve(const DependenceCurve& c) {
  return {
      {"x_feature", c.x_name},
      {"source", to_string(c.source)},
      {"offset", c.offset},
      {"subset_size", c.subset_size},
      {"x", numbers(c.x)},
      {"mean", numbers(c.mean)},
      {"smoothed", numbers(c.smoothed)},
      {"dev", numbers(c.dev)},
      {"count", c.count},
  };
}

json aligned_curve(const AlignedCurve& c, std::string_view role, bool with_band) {
  std::vector<std::string> flags;
  flags.reserve(c.flags.size());
  for (const auto f : c.flags) flags.emplace_back(to_string(f));
  json j = {
      {"role", role},
      {"source", to_string(c.source)},
      {"subset_size", c.subset_size},
      {"mean", numbers(c.mean)},
      {"smoothed", numbers(c.smoothed)},
      {"count", c.count},
      {"flags", flags},
  };
  if (with_band) {
    std::vector<double> lo(c.smoothed.size());
    std::vector<double> hi(c.smoothed.size());
    for (std::size_t i = 0; i < lo.size(); ++i) {
      lo[i] = c.smoothed[i] - c.smoothed_dev[i];
      hi[i] = c.smoothed[i] + c.smoothed_dev[i];
    }
    j["dev"] = numbers(c.dev);
    j["band"] = {{"lower", numbers(lo)}, {"upper", numbers(hi)}};
  }
  return j;
}

json decomposition(const EffectDecomposition& d) {
  return {
      {"feature", d.feature_name},
      {"main_effect", number(d.main_effect)},
      {"series", d.series == EffectSeries::raw ? "raw" : "display"},
      {"grid", numbers(d.grid)},
      {"main_line", numbers(d.main_line)},
      {"interaction", numbers(d.interaction)},
      {"instance_x", d.instance_x},
      {"instance_index", d.instance_index},
      {"instance_x_score", d.instance_x_score},
  };
}

json heatmap(const DistributionHeatmap& h) {
  json j = {
      {"feature", h.name},
      {"kind", to_string(h.kind)},
      {"full_counts", h.full_counts},
      {"subset_counts", h.subset_counts},
      {"full_rel", numbers(h.full_rel)},
      {"subset_rel", numbers(h.subset_rel)},
      {"instance_bin", h.instance_bin},
  };
  if (h.kind == FeatureKind::categorical)
    j["categories"] = numbers(h.categories);
  else
    j["bin_edges"] = numbers(h.bin_edges);
  return j;
}

json ranking(const FeatureRanking& r, double offset) {
  json entries = json::array();
  for (const auto& e : r.entries) {
    entries.push_back({
        {"feature", e.name},
        {"score", e.score},
        {"main_effect", number(e.decomposition.main_effect)},
        {"preview",
         {{"x", numbers(e.preview.x)},
          {"smoothed", numbers(e.preview.smoothed)},
          {"mean", numbers(e.preview.mean)},
          {"count", e.preview.count},
          {"subset_size", e.preview.subset_size}}},
        {"interaction",
         {{"grid", numbers(e.decomposition.grid)},
          {"main_line", numbers(e.decomposition.main_line)},
          {"values", numbers(e.decomposition.interaction)}}},
    });
  }
  return {{"score_kind", to_string(r.kind)}, {"mean_prediction", offset}, {"entries", entries}};
}

json pdp_comparison(const PdpComparison& p) {
  return {
      {"feature", p.feature},
      {"expression", p.expression},
      {"grid", numbers(p.grid)},
      {"engine", numbers(p.engine)},
      {"pdp", numbers(p.pdp)},
      {"max_abs_gap", p.max_abs_gap},
  };
}

}  // namespace finch::wire
