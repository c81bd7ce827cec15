// SPDX-License-Identifier: Apache-2.0
#include "session.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "distribution.hpp"
#include "error.hpp"
#include "serialize.hpp"
#include "synth.hpp"

namespace finch {

using nlohmann::json;

namespace {

const json& arg(const json& args, const char* key) {
  static const json null_value;
  if (!args.is_object()) return null_value;
  const auto it = args.find(key);
  return it == args.end() ? null_value : *it;
}

std::string string_arg(const json& args, const char* key) {
  const json& v = arg(args, key);
  if (!v.is_string())
    throw Error(ErrorCode::invalid_argument, std::string("argument '") + key + "' must be a string");
  return v.get<std::string>();
}

std::optional<bool> bool_arg(const json& args, const char* key) {
  const json& v = arg(args, key);
  if (v.is_null()) return std::nullopt;
  if (!v.is_boolean())
    throw Error(ErrorCode::invalid_argument, std::string("argument '") + key + "' must be a boolean");
  return v.get<bool>();
}

SubsetChain rebuild_chain(const Dataset& ds, const SubsetChain& old, const InstanceVector& inst,
                          const Config& config) {
  SubsetChain chain(ds, old.x_feature(), inst, config.subset);
  for (const auto f : old.conditioning()) chain = extend_chain(ds, chain, f);
  return chain;
}

std::uint64_t fnv1a(std::string_view a, std::string_view b) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto s : {a, b})
    for (const unsigned char ch : s) {
      h ^= ch;
      h *= 0x100000001b3ULL;
    }
  return h;
}

}  // namespace

// --- derived cache -------------------------------------------------------------------

std::shared_ptr<const DerivedCache::StepCurves> DerivedCache::curves(const Dataset& ds,
                                                                      ColumnRef column,
                                                                      const SubsetChain& chain,
                                                                      std::size_t step,
                                                                      const Config& config) {
  const auto sel = chain.step_ptr(step);
  {
    std::lock_guard lock(mutex_);
    if (auto it = curves_.find(sel.get()); it != curves_.end()) return it->second.second;
  }
  auto out = std::make_shared<StepCurves>();
  const CurveOptions opts{true, config.smoothing};
  out->prediction = compute_curve(ds, sel->rows, chain.x_feature(), column, opts);
  if (auto truth = ds.truth_column())
    out->truth = compute_curve(ds, sel->rows, chain.x_feature(), *truth, opts);
  std::lock_guard lock(mutex_);
  // A concurrent reader may have filled the slot first; both values are equal.
  auto [it, _] = curves_.try_emplace(sel.get(), sel, std::move(out));
  return it->second.second;
}

double DerivedCache::main_effect(const Dataset& ds, ColumnRef column, const SubsetChain& chain,
                                 std::size_t feature) {
  {
    std::lock_guard lock(mutex_);
    if (auto it = main_effects_.find(feature); it != main_effects_.end()) return it->second;
  }
  const double a = finch::main_effect(ds, feature, chain.instance(), column, chain.config());
  std::lock_guard lock(mutex_);
  main_effects_.emplace(feature, a);
  return a;
}

void DerivedCache::retain(const std::optional<SubsetChain>& chain) {
  std::lock_guard lock(mutex_);
  for (auto it = curves_.begin(); it != curves_.end();) {
    bool keep = false;
    if (chain)
      for (std::size_t k = 0; k < chain->step_count() && !keep; ++k)
        keep = chain->step_ptr(k).get() == it->first;
    it = keep ? std::next(it) : curves_.erase(it);
  }
}

// --- parsing -------------------------------------------------------------------------

TargetSpec parse_target(const json& j) {
  TargetSpec t;
  if (j.is_null()) return t;
  if (j.is_string()) {
    t.mode = TargetMode::classification;
    t.class_label = j.get<std::string>();
    t.display_name = *t.class_label;
    return t;
  }
  if (!j.is_object()) throw Error(ErrorCode::invalid_argument, "target must be an object");
  const json& cls = arg(j, "class");
  const json& mode = arg(j, "mode");
  if (!cls.is_null() && !cls.is_string())
    throw Error(ErrorCode::invalid_argument, "target class must be a string");
  if (mode.is_null()) {
    t.mode = cls.is_null() ? TargetMode::regression : TargetMode::classification;
  } else if (mode == "regression") {
    t.mode = TargetMode::regression;
  } else if (mode == "classification") {
    t.mode = TargetMode::classification;
  } else {
    throw Error(ErrorCode::invalid_argument, "target mode must be regression or classification");
  }
  if (!cls.is_null()) t.class_label = cls.get<std::string>();
  if (const json& dn = arg(j, "display_name"); dn.is_string())
    t.display_name = dn.get<std::string>();
  else
    t.display_name = t.class_label.value_or("prediction");
  return t;
}

InstanceVector parse_instance(const Dataset& ds, const json& j) {
  if (j.is_null()) return impute_instance(std::map<std::string, double>{}, ds);
  if (!j.is_object()) throw Error(ErrorCode::invalid_argument, "instance must be an object");
  if (const json& row = arg(j, "row"); !row.is_null()) {
    if (!row.is_number_integer() || row.get<long long>() < 0)
      throw Error(ErrorCode::invalid_argument, "instance row must be a non-negative integer");
    const auto r = row.get<std::size_t>();
    if (r >= ds.rows())
      throw Error(ErrorCode::not_found, "instance row " + std::to_string(r) + " out of range",
                  "dataset has " + std::to_string(ds.rows()) + " rows");
    return instance_from_row(ds, r);
  }
  std::map<std::string, double> partial;
  const json& values = arg(j, "values");
  if (!values.is_null()) {
    if (!values.is_object()) throw Error(ErrorCode::invalid_argument, "instance values must be an object");
    for (const auto& [name, v] : values.items()) {
      if (v.is_null()) {
        if (!ds.find_feature(name))
          throw Error(ErrorCode::not_found, "instance names unknown feature '" + name + "'");
        continue;
      }
      if (!v.is_number())
        throw Error(ErrorCode::invalid_argument, "instance value for '" + name + "' must be a number");
      partial[name] = v.get<double>();
    }
  }
  return impute_instance(partial, ds);
}

SessionState make_session_state(std::shared_ptr<const DatasetEntry> dataset, const json& request,
                                const Config& config) {
  SessionState s;
  s.dataset = std::move(dataset);
  const Dataset& ds = s.data();
  s.target = parse_target(arg(request, "target"));
  s.column = resolve_target(ds, s.target);
  if (s.target.display_name.empty()) {
    const auto& vc = ds.values(s.column);
    s.target.display_name = vc.label.empty() ? vc.name : vc.label;
  }
  s.instance = parse_instance(ds, arg(request, "instance"));
  s.cache = std::make_shared<DerivedCache>();
  if (const json& x = arg(request, "x_feature"); !x.is_null()) {
    if (!x.is_string()) throw Error(ErrorCode::invalid_argument, "x_feature must be a string");
    s.chain.emplace(ds, ds.feature_index(x.get<std::string>()), s.instance, config.subset);
  }
  return s;
}

SessionState apply_command(const SessionState& state, const json& command, const Config& config) {
  if (!command.is_object() || !command.contains("command") || !command["command"].is_string())
    throw Error(ErrorCode::invalid_argument, "command must be {\"command\": name, \"args\": {...}}");
  const std::string name = command["command"].get<std::string>();
  const json& args = arg(command, "args");
  const Dataset& ds = state.data();

  SessionState next = state;
  ++next.version;

  if (name == "set_x_feature") {
    const auto f = ds.feature_index(string_arg(args, "feature"));
    next.chain.emplace(ds, f, next.instance, config.subset);
  } else if (name == "add_feature") {
    if (!next.chain) throw Error(ErrorCode::chain, "choose an x feature before adding features");
    next.chain = extend_chain(ds, *next.chain, string_arg(args, "feature"));
  } else if (name == "remove_last") {
    if (!next.chain) throw Error(ErrorCode::chain, "no x feature chosen");
    next.chain = pop_chain(*next.chain);
  } else if (name == "set_instance") {
    next.instance = parse_instance(ds, args);
    if (next.chain) next.chain = rebuild_chain(ds, *next.chain, next.instance, config);
    next.cache = std::make_shared<DerivedCache>();
  } else if (name == "set_view") {
    if (!args.is_object()) throw Error(ErrorCode::invalid_argument, "set_view needs an args object");
    static const char* known[] = {"highlight_mode",   "smoothing_enabled", "show_truth",
                                  "show_uncertainty", "show_interaction",  "ranking_score_kind"};
    for (const auto& [key, _] : args.items()) {
      bool ok = false;
      for (const char* k : known) ok = ok || key == k;
      if (!ok) throw Error(ErrorCode::invalid_argument, "unknown view option '" + key + "'");
    }
    if (args.contains("highlight_mode")) {
      const json& m = args["highlight_mode"];
      if (m.is_null() || m == "auto") {
        next.view.highlight_mode.reset();
      } else {
        const auto mode = m.is_string() ? parse_highlight_mode(m.get<std::string>()) : std::nullopt;
        if (!mode) throw Error(ErrorCode::invalid_argument, "unknown highlight mode " + m.dump());
        next.view.highlight_mode = mode;
      }
    }
    if (auto v = bool_arg(args, "smoothing_enabled")) next.view.smoothing_enabled = *v;
    if (auto v = bool_arg(args, "show_uncertainty")) next.view.show_uncertainty = *v;
    if (auto v = bool_arg(args, "show_interaction")) next.view.show_interaction = *v;
    if (auto v = bool_arg(args, "show_truth")) {
      if (*v && !ds.truth_column())
        throw Error(ErrorCode::unavailable,
                    "show_truth needs a truth column, but the dataset has none",
                    "assign the role 'truth' to a column when loading the table");
      next.view.show_truth = *v;
    }
    if (args.contains("ranking_score_kind")) {
      const json& k = args["ranking_score_kind"];
      const auto kind = k.is_string() ? parse_score_kind(k.get<std::string>()) : std::nullopt;
      if (!kind) throw Error(ErrorCode::invalid_argument, "unknown ranking score kind " + k.dump());
      next.view.ranking_score_kind = *kind;
    }
  } else {
    throw Error(ErrorCode::invalid_argument, "unknown command '" + name + "'",
                "expected set_x_feature | add_feature | remove_last | set_instance | set_view");
  }
  next.cache->retain(next.chain);
  return next;
}

json view_to_json(const ViewOptions& v) {
  return {
      {"highlight_mode", v.highlight_mode ? json(to_string(*v.highlight_mode)) : json("auto")},
      {"smoothing_enabled", v.smoothing_enabled},
      {"show_truth", v.show_truth},
      {"show_uncertainty", v.show_uncertainty},
      {"show_interaction", v.show_interaction},
      {"ranking_score_kind", to_string(v.ranking_score_kind)},
  };
}

json session_summary(const SessionState& s) {
  const Dataset& ds = s.data();
  json chain = json::array();
  json x = nullptr;
  if (s.chain) {
    x = ds.feature(s.chain->x_feature()).name;
    for (const auto f : s.chain->conditioning()) chain.push_back(ds.feature(f).name);
  }
  return {
      {"session_id", s.id},
      {"dataset_id", s.dataset->id},
      {"version", s.version},
      {"target",
       {{"mode", s.target.mode == TargetMode::regression ? "regression" : "classification"},
        {"class", s.target.class_label ? json(*s.target.class_label) : json(nullptr)},
        {"display_name", s.target.display_name},
        {"column", ds.values(s.column).name}}},
      {"x_feature", x},
      {"chain", chain},
      {"instance", wire::instance(ds, s.instance)},
      {"view", view_to_json(s.view)},
  };
}

// --- payload ----------------------------------------------------------------------------

namespace {

bool highlight_applicable(HighlightMode mode, std::size_t step, bool truth_shown) {
  switch (mode) {
    case HighlightMode::base_vs_mean: return true;
    case HighlightMode::base_vs_current:
    case HighlightMode::current_vs_base:
    case HighlightMode::interaction: return step >= 1;
    case HighlightMode::previous_vs_current: return step >= 2;
    case HighlightMode::truth_deviation: return truth_shown;
  }
  return false;
}

struct Extent {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void add(const std::vector<double>& v) {
    for (const double x : v) add(x);
  }
};

}  // namespace

json build_payload(const SessionState& s, const Config& config) {
  if (!s.chain) throw Error(ErrorCode::invalid_argument, "no x feature selected");
  const Dataset& ds = s.data();
  const SubsetChain& chain = *s.chain;
  const std::size_t k = chain.length();
  const std::size_t x = chain.x_feature();
  const double c = ds.global_mean(s.column);
  const double instance_x = s.instance.values.at(x);

  auto display = [&](const DependenceCurve& curve) {
    return s.view.smoothing_enabled ? curve : without_smoothing(curve);
  };
  const auto base = s.cache->curves(ds, s.column, chain, 0, config);
  const auto current = s.cache->curves(ds, s.column, chain, k, config);
  std::vector<DependenceCurve> members{display(base->prediction)};
  if (k >= 2) members.push_back(display(s.cache->curves(ds, s.column, chain, k - 1, config)->prediction));
  if (k >= 1) members.push_back(display(current->prediction));

  std::optional<DependenceCurve> truth;
  if (s.view.show_truth) {
    if (!current->truth)
      throw Error(ErrorCode::unavailable, "ground-truth view unavailable: no truth column loaded");
    truth = display(*current->truth);
  }
  CurveBundle bundle = align_curves(members, truth ? &*truth : nullptr);

  std::optional<EffectDecomposition> decomposition;
  if (k >= 1) {
    const std::size_t z = chain.conditioning().back();
    const double a = s.cache->main_effect(ds, s.column, chain, z);
    decomposition = interaction_series(bundle, a, z, ds.feature(z).name, instance_x,
                                       EffectSeries::display);
  }

  HighlightMode mode = default_highlight(bundle.chain_curves);
  if (s.view.show_truth)
    mode = HighlightMode::truth_deviation;
  else if (s.view.show_interaction && k >= 1)
    mode = HighlightMode::interaction;
  if (s.view.highlight_mode && highlight_applicable(*s.view.highlight_mode, k, s.view.show_truth))
    mode = *s.view.highlight_mode;
  if (mode == HighlightMode::interaction)
    apply_interaction_highlight(bundle, *decomposition);
  else
    set_highlight(bundle, mode);

  json curves = json::array();
  const bool band = s.view.show_uncertainty;
  curves.push_back(wire::aligned_curve(bundle.base, "base", band && k == 0));
  if (bundle.previous) curves.push_back(wire::aligned_curve(*bundle.previous, "previous", false));
  if (k >= 1) curves.push_back(wire::aligned_curve(bundle.current, "current", band));
  if (bundle.truth) curves.push_back(wire::aligned_curve(*bundle.truth, "truth", false));

  Extent abs_extent;
  abs_extent.add(c);
  for (const AlignedCurve* a : {&bundle.base, &bundle.current}) abs_extent.add(a->smoothed);
  if (bundle.previous) abs_extent.add(bundle.previous->smoothed);
  if (bundle.truth) abs_extent.add(bundle.truth->smoothed);
  if (band)
    for (std::size_t i = 0; i < bundle.grid.size(); ++i) {
      abs_extent.add(bundle.current.smoothed[i] - bundle.current.smoothed_dev[i]);
      abs_extent.add(bundle.current.smoothed[i] + bundle.current.smoothed_dev[i]);
    }
  if (decomposition && s.view.show_interaction) abs_extent.add(decomposition->main_line);

  const auto& current_rows = chain.last().rows;
  json distributions = {
      {"x", wire::heatmap(feature_distribution(ds, current_rows, x, s.instance, config.heatmap_bins))},
      {"conditioning", json::array()},
  };
  for (const auto f : chain.conditioning())
    distributions["conditioning"].push_back(
        wire::heatmap(feature_distribution(ds, current_rows, f, s.instance, config.heatmap_bins)));

  json subsets = json::array();
  for (std::size_t step = 0; step <= k; ++step)
    subsets.push_back(wire::subset_diagnostics(ds, chain.step(step), step));

  json chain_names = json::array();
  for (const auto f : chain.conditioning()) chain_names.push_back(ds.feature(f).name);

  const auto& xmeta = ds.feature(x);
  json payload = {
      {"format", "finch-payload/1"},
      {"x_feature", {{"name", xmeta.name}, {"kind", to_string(xmeta.kind)}}},
      {"target",
       {{"mode", s.target.mode == TargetMode::regression ? "regression" : "classification"},
        {"class", s.target.class_label ? json(*s.target.class_label) : json(nullptr)},
        {"display_name", s.target.display_name},
        {"column", ds.values(s.column).name}}},
      {"mean_prediction", c},
      {"chain", chain_names},
      {"step", k},
      {"instance", wire::instance(ds, s.instance)},
      {"instance_marker", {{"x", instance_x}, {"grid_index", bundle.grid_index_nearest(instance_x)}}},
      {"axis",
       {{"x", {{"min", xmeta.min}, {"max", xmeta.max}}},
        {"absolute", {{"min", abs_extent.lo}, {"max", abs_extent.hi}}},
        {"centered", {{"min", abs_extent.lo - c}, {"max", abs_extent.hi - c}}}}},
      {"grid", wire::numbers(bundle.grid)},
      {"curves", curves},
      {"highlight",
       {{"mode", to_string(bundle.mode)},
        {"requested", s.view.highlight_mode ? json(to_string(*s.view.highlight_mode)) : json("auto")},
        {"area", wire::numbers(bundle.highlight)}}},
      {"decomposition", decomposition ? wire::decomposition(*decomposition) : json(nullptr)},
      {"distributions", distributions},
      {"subsets", subsets},
      {"view", view_to_json(s.view)},
  };
  return payload;
}

json build_ranking(const SessionState& s, std::optional<ScoreKind> kind, const Config& config) {
  if (!s.chain) throw Error(ErrorCode::invalid_argument, "no x feature selected");
  const auto r = rank_next_features(s.data(), *s.chain, s.column,
                                    kind.value_or(s.view.ranking_score_kind), config);
  json j = wire::ranking(r, s.data().global_mean(s.column));
  j["x_feature"] = s.data().feature(s.chain->x_feature()).name;
  return j;
}

json build_overview(const DatasetEntry& dataset, const json& request, const Config& config) {
  const Dataset& ds = *dataset.data;
  const auto target = parse_target(arg(request, "target"));
  const auto column = resolve_target(ds, target);
  const auto inst = parse_instance(ds, arg(request, "instance"));
  const auto rows = all_rows(ds);
  json plots = json::array();
  for (std::size_t f = 0; f < ds.feature_count(); ++f) {
    const auto curve = compute_curve(ds, rows, f, column, {true, config.smoothing});
    plots.push_back({
        {"feature", ds.feature(f).name},
        {"kind", to_string(ds.feature(f).kind)},
        {"instance_x", inst.values[f]},
        {"x", wire::numbers(curve.x)},
        {"mean", wire::numbers(curve.mean)},
        {"smoothed", wire::numbers(curve.smoothed)},
        {"count", curve.count},
    });
  }
  return {
      {"dataset_id", dataset.id},
      {"mean_prediction", ds.global_mean(column)},
      {"target_column", ds.values(column).name},
      {"instance", wire::instance(ds, inst)},
      {"plots", plots},
  };
}

// --- engine ------------------------------------------------------------------------------

json Engine::add_dataset(std::string_view bytes, const Schema& schema, std::optional<std::string> id) {
  std::istringstream in{std::string(bytes)};
  auto ds = std::make_shared<const Dataset>(load_table(in, schema, config_));
  if (!id) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "ds-%016llx",
                  static_cast<unsigned long long>(fnv1a(bytes, schema.to_json_text())));
    id = buf;
  }
  auto entry = std::make_shared<const DatasetEntry>(DatasetEntry{*id, std::move(ds)});
  {
    std::lock_guard lock(mutex_);
    datasets_[*id] = entry;
  }
  json info = wire::dataset_info(*entry->data);
  info["dataset_id"] = *id;
  return info;
}

json Engine::load_dataset_file(const std::string& path, const Schema& schema,
                               std::optional<std::string> id) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open data file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return add_dataset(ss.str(), schema, std::move(id));
}

json Engine::load_directory(const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw Error(ErrorCode::io, "'" + dir + "' is not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  json out = json::array();
  for (const auto& p : files) {
    const std::string schema_path = schema_sidecar_path(p.string());
    std::ifstream sin(schema_path, std::ios::binary);
    if (!sin) continue;
    std::ostringstream ss;
    ss << sin.rdbuf();
    out.push_back(load_dataset_file(p.string(), Schema::from_json_text(ss.str()), p.stem().string()));
  }
  return out;
}

std::shared_ptr<const DatasetEntry> Engine::dataset(const std::string& id) const {
  std::lock_guard lock(mutex_);
  const auto it = datasets_.find(id);
  if (it == datasets_.end()) throw Error(ErrorCode::not_found, "unknown dataset '" + id + "'");
  return it->second;
}

json Engine::overview(const std::string& dataset_id, const json& request) const {
  return build_overview(*dataset(dataset_id), request, config_);
}

json Engine::create_session(const json& request) {
  const json& ds_id = arg(request, "dataset_id");
  if (!ds_id.is_string()) throw Error(ErrorCode::invalid_argument, "dataset_id must be a string");
  auto state = std::make_shared<SessionState>(make_session_state(dataset(ds_id.get<std::string>()),
                                                                 request, config_));
  auto slot = std::make_shared<SessionSlot>();
  {
    static thread_local std::mt19937_64 rng{std::random_device{}()};
    std::lock_guard lock(mutex_);
    char buf[48];
    std::snprintf(buf, sizeof buf, "s%llu-%08llx", static_cast<unsigned long long>(next_session_++),
                  static_cast<unsigned long long>(rng() & 0xffffffffULL));
    state->id = buf;
    slot->state = state;
    sessions_[state->id] = slot;
  }
  return session_summary(*state);
}

std::shared_ptr<Engine::SessionSlot> Engine::slot(const std::string& session_id) const {
  std::lock_guard lock(mutex_);
  const auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw Error(ErrorCode::not_found, "unknown session '" + session_id + "'");
  return it->second;
}

std::shared_ptr<const SessionState> Engine::snapshot(const std::string& session_id) const {
  const auto s = slot(session_id);
  std::lock_guard lock(s->state_mutex);
  return s->state;
}

json Engine::command(const std::string& session_id, const json& command) {
  const auto s = slot(session_id);
  std::lock_guard writer(s->write_mutex);
  std::shared_ptr<const SessionState> current;
  {
    std::lock_guard lock(s->state_mutex);
    current = s->state;
  }
  auto next = std::make_shared<const SessionState>(apply_command(*current, command, config_));
  {
    std::lock_guard lock(s->state_mutex);
    s->state = next;
  }
  return session_summary(*next);
}

std::string Engine::payload(const std::string& session_id) const {
  return build_payload(*snapshot(session_id), config_).dump();
}

std::string Engine::ranking(const std::string& session_id, std::optional<ScoreKind> kind) const {
  return build_ranking(*snapshot(session_id), kind, config_).dump();
}

void Engine::close_session(const std::string& session_id) {
  std::lock_guard lock(mutex_);
  if (sessions_.erase(session_id) == 0)
    throw Error(ErrorCode::not_found, "unknown session '" + session_id + "'");
}

}  // namespace finch
