// SPDX-License-Identifier: Apache-2.0
#include "table.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "error.hpp"
#include "json.hpp"

namespace finch {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Splits one CSV record. Double quotes may wrap a field and "" escapes a
// quote; embedded newlines are not supported.
std::vector<std::string> split_record(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.emplace_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.emplace_back(trim(cur));
  return out;
}

bool is_missing(std::string_view cell) {
  if (cell.empty()) return true;
  std::string lower(cell);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return lower == "na" || lower == "nan" || lower == "null";
}

std::optional<double> parse_number(std::string_view cell) {
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  double v = 0.0;
  const auto* end = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(cell.data(), end, v);
  if (ec != std::errc{} || ptr != end || !std::isfinite(v)) return std::nullopt;
  return v;
}

struct ColumnPlan {
  std::size_t csv_index;
  ColumnRole role;
  std::string name;
};

}  // namespace

std::string_view to_string(FeatureKind kind) noexcept {
  return kind == FeatureKind::categorical ? "categorical" : "continuous";
}

double FeatureMeta::normalize(double raw) const noexcept {
  if (norm.scale <= 0.0) return 0.0;
  const double v = (raw - norm.offset) / norm.scale;
  return std::clamp(v, 0.0, 1.0);
}

// --- schema -------------------------------------------------------------------

ColumnRole ColumnRole::parse(std::string_view text) {
  text = trim(text);
  if (text == "feature") return {RoleKind::feature, {}};
  if (text == "truth") return {RoleKind::truth, {}};
  if (text == "ignore") return {RoleKind::ignore, {}};
  if (text.starts_with("prediction:")) {
    auto label = trim(text.substr(11));
    if (label.empty()) throw Error(ErrorCode::schema, "prediction role needs a name");
    return {RoleKind::prediction, std::string(label)};
  }
  if (text == "prediction") return {RoleKind::prediction, "prediction"};
  throw Error(ErrorCode::schema, "unknown column role '" + std::string(text) + "'",
              "expected feature | prediction:<name> | truth | ignore");
}

std::string ColumnRole::to_string() const {
  switch (kind) {
    case RoleKind::feature: return "feature";
    case RoleKind::truth: return "truth";
    case RoleKind::ignore: return "ignore";
    case RoleKind::prediction: return "prediction:" + label;
  }
  return "feature";
}

Schema Schema::from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::schema, "schema is not valid JSON", e.what());
  }
  // Accept both a bare mapping and {"columns": {...}}.
  if (j.is_object() && j.contains("columns") && j["columns"].is_object()) j = j["columns"];
  if (!j.is_object()) throw Error(ErrorCode::schema, "schema must be a JSON object");
  Schema s;
  for (const auto& [col, role] : j.items()) {
    if (!role.is_string())
      throw Error(ErrorCode::schema, "role for column '" + col + "' must be a string");
    if (col == "*")
      s.default_role = ColumnRole::parse(role.get<std::string>());
    else
      s.roles[col] = ColumnRole::parse(role.get<std::string>());
  }
  return s;
}

Schema Schema::from_assignments(std::string_view text) {
  Schema s;
  for (const auto& part : split_record(text)) {
    if (part.empty()) continue;
    const auto eq = part.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::schema, "schema entry '" + part + "' is not column=role");
    const std::string col(trim(std::string_view(part).substr(0, eq)));
    const auto role = ColumnRole::parse(std::string_view(part).substr(eq + 1));
    if (col == "*")
      s.default_role = role;
    else
      s.roles[col] = role;
  }
  return s;
}

std::string Schema::to_json_text() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [col, role] : roles) j[col] = role.to_string();
  if (default_role.kind != RoleKind::feature) j["*"] = default_role.to_string();
  return j.dump(2);
}

// --- loading ---------------------------------------------------------------------

Dataset load_table(std::istream& source, const Schema& schema, const Config& config) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(source, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split_record(line);
      break;
    }
  }
  if (header.empty()) throw Error(ErrorCode::empty_data, "table has no header row");
  if (!header.empty() && header[0].starts_with("\xEF\xBB\xBF")) header[0].erase(0, 3);

  for (std::size_t i = 0; i < header.size(); ++i)
    for (std::size_t k = i + 1; k < header.size(); ++k)
      if (header[i] == header[k])
        throw Error(ErrorCode::schema, "duplicate column '" + header[i] + "' in header");

  for (const auto& [col, role] : schema.roles) {
    if (std::find(header.begin(), header.end(), col) == header.end()) {
      const auto code = ErrorCode::schema;
      if (role.kind == RoleKind::prediction)
        throw Error(code, "prediction column '" + col + "' is missing from the table");
      if (role.kind != RoleKind::ignore)
        throw Error(code, "column '" + col + "' named in the schema is missing from the table");
    }
  }

  std::vector<ColumnPlan> feature_plan;
  std::vector<ColumnPlan> value_plan;
  std::set<std::string> labels;
  bool have_truth = false;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const auto it = schema.roles.find(header[i]);
    const ColumnRole role = it == schema.roles.end() ? schema.default_role : it->second;
    switch (role.kind) {
      case RoleKind::feature: feature_plan.push_back({i, role, header[i]}); break;
      case RoleKind::ignore: break;
      case RoleKind::truth:
        if (have_truth) throw Error(ErrorCode::schema, "more than one truth column");
        have_truth = true;
        value_plan.push_back({i, role, header[i]});
        break;
      case RoleKind::prediction:
        if (!labels.insert(role.label).second)
          throw Error(ErrorCode::schema, "prediction name '" + role.label + "' used twice");
        value_plan.push_back({i, role, header[i]});
        break;
    }
  }
  if (labels.empty()) throw Error(ErrorCode::schema, "schema assigns no prediction column");
  if (feature_plan.empty()) throw Error(ErrorCode::schema, "schema assigns no feature column");

  Dataset ds;
  ds.columns_.resize(feature_plan.size());
  std::vector<std::vector<double>> value_data(value_plan.size());
  std::vector<double> fbuf(feature_plan.size());
  std::vector<double> vbuf(value_plan.size());

  std::size_t data_row = 0;
  while (std::getline(source, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    ++data_row;
    const auto cells = split_record(line);
    if (cells.size() != header.size())
      throw Error(ErrorCode::parse,
                  "line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                      " cells, found " + std::to_string(cells.size()));
    bool missing = false;
    auto read = [&](const ColumnPlan& plan, double& out) {
      const std::string& cell = cells[plan.csv_index];
      if (is_missing(cell)) {
        missing = true;
        return;
      }
      const auto v = parse_number(cell);
      if (!v)
        throw Error(ErrorCode::parse,
                    "line " + std::to_string(line_no) + ", column '" + plan.name +
                        "': non-numeric value '" + cell + "'",
                    "row " + std::to_string(data_row) + ", column " + std::to_string(plan.csv_index + 1));
      out = *v;
    };
    for (std::size_t f = 0; f < feature_plan.size(); ++f) read(feature_plan[f], fbuf[f]);
    for (std::size_t v = 0; v < value_plan.size(); ++v) read(value_plan[v], vbuf[v]);
    if (missing) {
      ++ds.rejected_rows_;
      continue;
    }
    for (std::size_t f = 0; f < feature_plan.size(); ++f) ds.columns_[f].push_back(fbuf[f]);
    for (std::size_t v = 0; v < value_plan.size(); ++v) value_data[v].push_back(vbuf[v]);
  }

  ds.rows_ = ds.columns_.front().size();
  if (ds.rows_ == 0) throw Error(ErrorCode::empty_data, "table contains no complete data rows");
  const double n = static_cast<double>(ds.rows_);

  ds.features_.resize(feature_plan.size());
  ds.normalized_.resize(feature_plan.size());
  ds.levels_.resize(feature_plan.size());
  ds.codes_.resize(feature_plan.size());
  for (std::size_t f = 0; f < feature_plan.size(); ++f) {
    const auto& col = ds.columns_[f];
    FeatureMeta& meta = ds.features_[f];
    meta.name = feature_plan[f].name;

    std::vector<double> levels(col);
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    meta.unique_count = levels.size();
    meta.min = levels.front();
    meta.max = levels.back();
    meta.mean = std::accumulate(col.begin(), col.end(), 0.0) / n;
    meta.kind = meta.unique_count <= config.categorical_max_unique ? FeatureKind::categorical
                                                                   : FeatureKind::continuous;
    if (meta.kind == FeatureKind::categorical) meta.categories = levels;
    meta.norm = {meta.min, meta.max - meta.min};

    auto& norm = ds.normalized_[f];
    norm.resize(col.size());
    auto& codes = ds.codes_[f];
    codes.resize(col.size());
    for (std::size_t r = 0; r < col.size(); ++r) {
      norm[r] = meta.normalize(col[r]);
      codes[r] = static_cast<std::uint32_t>(
          std::lower_bound(levels.begin(), levels.end(), col[r]) - levels.begin());
    }
    ds.levels_[f] = std::move(levels);
  }

  const bool classifier = labels.size() > 1;
  for (std::size_t v = 0; v < value_plan.size(); ++v) {
    ValueColumn vc;
    vc.name = value_plan[v].name;
    vc.is_truth = value_plan[v].role.kind == RoleKind::truth;
    vc.label = vc.is_truth ? std::string{} : value_plan[v].role.label;
    vc.values = std::move(value_data[v]);
    vc.mean = std::accumulate(vc.values.begin(), vc.values.end(), 0.0) / n;
    const auto [lo, hi] = std::minmax_element(vc.values.begin(), vc.values.end());
    vc.min = *lo;
    vc.max = *hi;
    if (classifier && !vc.is_truth && (vc.min < 0.0 || vc.max > 1.0))
      throw Error(ErrorCode::schema,
                  "class-probability column '" + vc.name + "' has values outside [0,1]");
    ds.values_.push_back(std::move(vc));
  }
  return ds;
}

Dataset load_table_file(const std::string& path, const Schema& schema, const Config& config) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open data file '" + path + "'");
  return load_table(in, schema, config);
}

// --- dataset accessors -----------------------------------------------------------

std::optional<std::size_t> Dataset::find_feature(std::string_view name) const noexcept {
  for (std::size_t f = 0; f < features_.size(); ++f)
    if (features_[f].name == name) return f;
  return std::nullopt;
}

std::size_t Dataset::feature_index(std::string_view name) const {
  if (auto f = find_feature(name)) return *f;
  throw Error(ErrorCode::not_found, "unknown feature '" + std::string(name) + "'");
}

std::vector<double> Dataset::row(std::size_t r) const {
  if (r >= rows_) throw Error(ErrorCode::not_found, "row " + std::to_string(r) + " out of range");
  std::vector<double> out(features_.size());
  for (std::size_t f = 0; f < features_.size(); ++f) out[f] = columns_[f][r];
  return out;
}

std::vector<ColumnRef> Dataset::prediction_columns() const {
  std::vector<ColumnRef> out;
  for (std::size_t i = 0; i < values_.size(); ++i)
    if (!values_[i].is_truth) out.push_back({i});
  return out;
}

std::optional<ColumnRef> Dataset::truth_column() const noexcept {
  for (std::size_t i = 0; i < values_.size(); ++i)
    if (values_[i].is_truth) return ColumnRef{i};
  return std::nullopt;
}

double normalize_value(const Dataset& ds, std::string_view feature, double raw) {
  return ds.feature(ds.feature_index(feature)).normalize(raw);
}

// --- instances --------------------------------------------------------------------

InstanceVector instance_from_row(const Dataset& ds, std::size_t row) {
  InstanceVector inst;
  inst.values = ds.row(row);
  inst.source_row = row;
  return inst;
}

InstanceVector impute_instance(const std::map<std::string, double>& partial, const Dataset& ds) {
  InstanceVector inst;
  inst.values.assign(ds.feature_count(), std::numeric_limits<double>::quiet_NaN());
  for (const auto& [name, value] : partial) {
    const auto f = ds.find_feature(name);
    if (!f) throw Error(ErrorCode::not_found, "instance names unknown feature '" + name + "'");
    if (!std::isfinite(value))
      throw Error(ErrorCode::invalid_argument, "instance value for '" + name + "' is not finite");
    inst.values[*f] = value;
  }
  return impute_instance(inst, ds);
}

InstanceVector impute_instance(const InstanceVector& instance, const Dataset& ds) {
  if (instance.values.size() != ds.feature_count())
    throw Error(ErrorCode::invalid_argument,
                "instance has " + std::to_string(instance.values.size()) + " values, dataset has " +
                    std::to_string(ds.feature_count()) + " features");
  InstanceVector out = instance;
  for (std::size_t f = 0; f < ds.feature_count(); ++f) {
    if (std::isnan(out.values[f])) {
      out.values[f] = ds.feature(f).mean;
      out.imputed_features.insert(ds.feature(f).name);
    }
  }
  return out;
}

// --- targets ----------------------------------------------------------------------

std::vector<std::string> target_options(const Dataset& ds) {
  std::vector<std::string> out;
  for (const auto& vc : ds.value_columns())
    if (!vc.is_truth) out.push_back(vc.label);
  return out;
}

ColumnRef resolve_target(const Dataset& ds, const TargetSpec& spec) {
  const auto preds = ds.prediction_columns();
  if (spec.mode == TargetMode::regression) {
    if (spec.class_label)
      throw Error(ErrorCode::invalid_argument, "regression targets take no class label");
    if (preds.size() != 1)
      throw Error(ErrorCode::invalid_argument,
                  "dataset has " + std::to_string(preds.size()) +
                      " prediction columns; choose one as a classification target");
    return preds.front();
  }
  if (!spec.class_label)
    throw Error(ErrorCode::invalid_argument, "classification target needs a class label");
  std::string available;
  for (const auto ref : preds) {
    const auto& vc = ds.values(ref);
    if (vc.label == *spec.class_label) {
      if (vc.min < 0.0 || vc.max > 1.0)
        throw Error(ErrorCode::invalid_argument,
                    "column '" + vc.name + "' is not a class probability (values outside [0,1])");
      return ref;
    }
    available += (available.empty() ? "" : ", ") + vc.label;
  }
  throw Error(ErrorCode::not_found, "unknown class '" + *spec.class_label + "'",
              "available classes: " + available);
}

}  // namespace finch
