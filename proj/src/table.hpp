// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "config.hpp"

namespace finch {

enum class FeatureKind { categorical, continuous };

std::string_view to_string(FeatureKind kind) noexcept;

/// Min-max normalization: normalized = clamp((raw - offset) / scale, 0, 1).
/// Constant columns carry scale 0 and always normalize to 0.
struct NormParams {
  double offset = 0.0;
  double scale = 0.0;
};

struct FeatureMeta {
  std::string name;
  FeatureKind kind = FeatureKind::continuous;
  std::size_t unique_count = 0;
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  std::vector<double> categories;  // categorical only, ascending
  NormParams norm;

  double normalize(double raw) const noexcept;
};

// --- schema ---------------------------------------------------------------

enum class RoleKind { feature, prediction, truth, ignore };

struct ColumnRole {
  RoleKind kind = RoleKind::feature;
  std::string label;  // prediction only: class label or target name

  static ColumnRole parse(std::string_view text);
  std::string to_string() const;
};

/// Column roles keyed by header name. Columns the schema does not mention
/// take `default_role`.
struct Schema {
  std::map<std::string, ColumnRole> roles;
  ColumnRole default_role{RoleKind::feature, {}};

  /// `{"column": "feature" | "prediction:<name>" | "truth" | "ignore", ...}`;
  /// an optional "*" entry sets the default role.
  static Schema from_json_text(const std::string& text);
  /// Comma list of `column=role` pairs, the form accepted on the command line.
  static Schema from_assignments(std::string_view text);
  std::string to_json_text() const;
};

// --- dataset ----------------------------------------------------------------

struct ValueColumn {
  std::string name;   // header name
  std::string label;  // prediction label, empty for truth
  bool is_truth = false;
  std::vector<double> values;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
};

/// Opaque index into Dataset::value_columns().
struct ColumnRef {
  std::size_t index = 0;
  friend bool operator==(ColumnRef, ColumnRef) = default;
};

/// Immutable after load. Feature values are stored column-major together with
/// their min-max normalized copy and, per feature, the sorted distinct values
/// plus a per-row code into them (used for grouping curves by exact x value).
class Dataset {
 public:
  std::size_t rows() const noexcept { return rows_; }
  std::size_t feature_count() const noexcept { return features_.size(); }
  const std::vector<FeatureMeta>& features() const noexcept { return features_; }
  const FeatureMeta& feature(std::size_t f) const { return features_.at(f); }

  std::optional<std::size_t> find_feature(std::string_view name) const noexcept;
  /// Throws not_found naming the feature.
  std::size_t feature_index(std::string_view name) const;

  std::span<const double> column(std::size_t f) const { return columns_.at(f); }
  std::span<const double> normalized(std::size_t f) const { return normalized_.at(f); }
  std::span<const double> levels(std::size_t f) const { return levels_.at(f); }
  std::span<const std::uint32_t> level_codes(std::size_t f) const { return codes_.at(f); }

  std::vector<double> row(std::size_t r) const;

  const std::vector<ValueColumn>& value_columns() const noexcept { return values_; }
  const ValueColumn& values(ColumnRef ref) const { return values_.at(ref.index); }
  std::vector<ColumnRef> prediction_columns() const;
  std::optional<ColumnRef> truth_column() const noexcept;
  /// Mean of the referenced column (the centering constant c for that target).
  double global_mean(ColumnRef ref) const { return values(ref).mean; }

  /// Rows dropped at load because a role-assigned cell was empty.
  std::size_t rejected_rows() const noexcept { return rejected_rows_; }

  friend Dataset load_table(std::istream&, const Schema&, const Config&);

 private:
  std::size_t rows_ = 0;
  std::vector<FeatureMeta> features_;
  std::vector<std::vector<double>> columns_;
  std::vector<std::vector<double>> normalized_;
  std::vector<std::vector<double>> levels_;
  std::vector<std::vector<std::uint32_t>> codes_;
  std::vector<ValueColumn> values_;
  std::size_t rejected_rows_ = 0;
};

/// Parses a comma-separated table with a header row. Throws Error with code
/// parse (bad cell, with row/column), schema (missing or duplicate role
/// columns), or empty_data.
Dataset load_table(std::istream& source, const Schema& schema, const Config& config = {});
Dataset load_table_file(const std::string& path, const Schema& schema, const Config& config = {});

double normalize_value(const Dataset& ds, std::string_view feature, double raw);

// --- instance ---------------------------------------------------------------

struct InstanceVector {
  std::vector<double> values;             // one per dataset feature
  std::optional<std::size_t> source_row;  // empty for custom instances
  std::set<std::string> imputed_features;

  bool is_custom() const noexcept { return !source_row.has_value(); }
  friend bool operator==(const InstanceVector&, const InstanceVector&) = default;
};

InstanceVector instance_from_row(const Dataset& ds, std::size_t row);
/// Absent features receive the dataset mean and are recorded as imputed.
InstanceVector impute_instance(const std::map<std::string, double>& partial, const Dataset& ds);
/// Re-imputes an existing instance: supplied values are kept as-is.
InstanceVector impute_instance(const InstanceVector& instance, const Dataset& ds);

// --- target -----------------------------------------------------------------

enum class TargetMode { regression, classification };

struct TargetSpec {
  TargetMode mode = TargetMode::regression;
  std::optional<std::string> class_label;
  std::string display_name;
};

/// The column whose mean defines c. Regression requires a single prediction
/// column; classification picks the probability column of `class_label`.
ColumnRef resolve_target(const Dataset& ds, const TargetSpec& spec);

/// Labels of the available prediction columns, in header order.
std::vector<std::string> target_options(const Dataset& ds);

}  // namespace finch
