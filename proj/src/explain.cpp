// SPDX-License-Identifier: Apache-2.0
#include "explain.hpp"

#include "error.hpp"
#include "serialize.hpp"

namespace finch {

using nlohmann::json;

json explain(std::shared_ptr<const DatasetEntry> dataset, const json& request, const Config& config) {
  if (!request.is_object()) throw Error(ErrorCode::invalid_argument, "explain request must be an object");
  if (!request.contains("x_feature"))
    throw Error(ErrorCode::invalid_argument, "explain request needs an x_feature");
  SessionState state = make_session_state(std::move(dataset), request, config);
  state.id = "explain";
  if (const auto it = request.find("view"); it != request.end())
    state = apply_command(state, {{"command", "set_view"}, {"args", *it}}, config);

  json steps = json::array();
  if (const auto it = request.find("chain"); it != request.end()) {
    if (!it->is_array()) throw Error(ErrorCode::invalid_argument, "chain must be an array of names");
    for (const auto& name : *it) {
      if (!name.is_string()) throw Error(ErrorCode::invalid_argument, "chain must be an array of names");
      state = apply_command(state, {{"command", "add_feature"}, {"args", {{"feature", name}}}}, config);

      const Dataset& ds = state.data();
      const SubsetChain& chain = *state.chain;
      const std::size_t k = chain.length();
      const std::size_t z = chain.conditioning().back();
      const CurveOptions opts{true, config.smoothing};
      const auto base = compute_curve(ds, chain.step(0).rows, chain.x_feature(), state.column, opts);
      const auto prev = compute_curve(ds, chain.step(k - 1).rows, chain.x_feature(), state.column, opts);
      const auto cur = compute_curve(ds, chain.last().rows, chain.x_feature(), state.column, opts);
      std::vector<DependenceCurve> members{base};
      if (k >= 2) members.push_back(prev);
      members.push_back(cur);
      const auto bundle = align_curves(members, nullptr);
      const double a = state.cache->main_effect(ds, state.column, chain, z);
      const auto d = interaction_series(bundle, a, z, ds.feature(z).name,
                                        state.instance.values.at(chain.x_feature()), EffectSeries::raw);
      steps.push_back({
          {"step", k},
          {"feature", ds.feature(z).name},
          {"subset", wire::subset_diagnostics(ds, chain.last(), k)},
          {"main_effect", wire::number(a)},
          {"decomposition", wire::decomposition(d)},
      });
    }
  }
  json payload = build_payload(state, config);
  return {
      {"format", "finch-explain/1"},
      {"dataset_id", state.dataset->id},
      {"steps", steps},
      {"payload", payload},
  };
}

}  // namespace finch
