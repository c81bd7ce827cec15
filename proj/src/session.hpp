// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "curve.hpp"
#include "effect.hpp"
#include "json.hpp"
#include "subset.hpp"
#include "table.hpp"

namespace finch {

struct ViewOptions {
  std::optional<HighlightMode> highlight_mode;  // empty: follow the chain-length default
  bool smoothing_enabled = true;
  bool show_truth = false;
  bool show_uncertainty = false;
  bool show_interaction = false;
  ScoreKind ranking_score_kind = ScoreKind::interaction_at_instance;
};

struct DatasetEntry {
  std::string id;
  std::shared_ptr<const Dataset> data;
};

/// Statistics derived from session state, keyed by subset selection identity.
/// View toggles read from here and never recompute anything.
class DerivedCache {
 public:
  struct StepCurves {
    DependenceCurve prediction;
    std::optional<DependenceCurve> truth;
  };

  std::shared_ptr<const StepCurves> curves(const Dataset& ds, ColumnRef column,
                                           const SubsetChain& chain, std::size_t step,
                                           const Config& config);
  double main_effect(const Dataset& ds, ColumnRef column, const SubsetChain& chain,
                     std::size_t feature);
  /// Drops entries for selections no longer referenced by `chain`.
  void retain(const std::optional<SubsetChain>& chain);

 private:
  std::mutex mutex_;
  std::map<const SubsetSelection*, std::pair<std::shared_ptr<const SubsetSelection>,
                                             std::shared_ptr<const StepCurves>>>
      curves_;
  std::map<std::size_t, double> main_effects_;  // one cache per instance
};

/// Immutable snapshot of one exploration session.
struct SessionState {
  std::string id;
  std::shared_ptr<const DatasetEntry> dataset;
  TargetSpec target;
  ColumnRef column;
  InstanceVector instance;
  std::optional<SubsetChain> chain;  // set once an x feature is chosen
  ViewOptions view;
  std::uint64_t version = 0;
  std::shared_ptr<DerivedCache> cache;

  const Dataset& data() const { return *dataset->data; }
};

/// Parses {"dataset_id"?, "target": {...}, "instance": {...}, "x_feature"?}
/// into an initial state. The instance is {"row": n} or {"values": {...}};
/// absent means the column-mean instance.
SessionState make_session_state(std::shared_ptr<const DatasetEntry> dataset,
                                const nlohmann::json& request, const Config& config);

TargetSpec parse_target(const nlohmann::json& j);
InstanceVector parse_instance(const Dataset& ds, const nlohmann::json& j);

/// Applies {"command": name, "args": {...}} and returns the successor state.
/// Commands: set_x_feature {feature}, add_feature {feature}, remove_last,
/// set_instance {row | values}, set_view {flags...}.
SessionState apply_command(const SessionState& state, const nlohmann::json& command,
                           const Config& config);

nlohmann::json session_summary(const SessionState& state);
nlohmann::json view_to_json(const ViewOptions& view);

/// Self-contained view of the current step: bundle, optional decomposition,
/// heatmaps, subset diagnostics, instance marker, mean line and axes.
nlohmann::json build_payload(const SessionState& state, const Config& config);
nlohmann::json build_ranking(const SessionState& state, std::optional<ScoreKind> kind,
                             const Config& config);

/// Step-0 curve of every feature for the dataset overview.
nlohmann::json build_overview(const DatasetEntry& dataset, const nlohmann::json& request,
                              const Config& config);

/// Process-wide registry of datasets and sessions. Each session's state is
/// swapped atomically: readers observe either the old or the new snapshot.
class Engine {
 public:
  explicit Engine(Config config = {}) : config_(std::move(config)) {}

  const Config& config() const noexcept { return config_; }

  /// Registers parsed table bytes. Without an explicit id, the id is derived
  /// from the content so re-uploading identical bytes yields the same id.
  nlohmann::json add_dataset(std::string_view bytes, const Schema& schema,
                             std::optional<std::string> id = std::nullopt);
  nlohmann::json load_dataset_file(const std::string& path, const Schema& schema,
                                   std::optional<std::string> id = std::nullopt);
  /// Loads every `*.csv` with a `.schema.json` sidecar; ids are file stems.
  nlohmann::json load_directory(const std::string& dir);
  std::shared_ptr<const DatasetEntry> dataset(const std::string& id) const;
  nlohmann::json overview(const std::string& dataset_id, const nlohmann::json& request) const;

  nlohmann::json create_session(const nlohmann::json& request);
  nlohmann::json command(const std::string& session_id, const nlohmann::json& command);
  std::shared_ptr<const SessionState> snapshot(const std::string& session_id) const;
  std::string payload(const std::string& session_id) const;
  std::string ranking(const std::string& session_id, std::optional<ScoreKind> kind) const;
  void close_session(const std::string& session_id);

 private:
  struct SessionSlot {
    std::mutex write_mutex;  // serializes commands
    mutable std::mutex state_mutex;
    std::shared_ptr<const SessionState> state;
  };
  std::shared_ptr<SessionSlot> slot(const std::string& session_id) const;

  Config config_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<const DatasetEntry>> datasets_;
  std::map<std::string, std::shared_ptr<SessionSlot>> sessions_;
  std::uint64_t next_session_ = 1;
};

}  // namespace finch
