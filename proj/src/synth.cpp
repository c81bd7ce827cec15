// SPDX-License-Identifier: Apache-2.0
#include "synth.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include <unistd.h>

#include "curve.hpp"
#include "error.hpp"
#include "json.hpp"
#include "subset.hpp"

namespace finch {
namespace fs = std::filesystem;

// --- polynomial -------------------------------------------------------------------

namespace {

class PolyParser {
 public:
  explicit PolyParser(std::string_view s) : s_(s) {}

  std::vector<Polynomial::Term> parse() {
    std::vector<Polynomial::Term> terms;
    skip();
    if (at_end()) fail("empty expression");
    double sign = 1.0;
    if (peek() == '-' || peek() == '+') {
      sign = peek() == '-' ? -1.0 : 1.0;
      ++pos_;
    }
    terms.push_back(term(sign));
    while (!at_end()) {
      const char op = peek();
      if (op != '+' && op != '-') fail("expected '+' or '-'");
      ++pos_;
      terms.push_back(term(op == '-' ? -1.0 : 1.0));
    }
    return terms;
  }

 private:
  Polynomial::Term term(double sign) {
    Polynomial::Term t;
    t.coefficient = sign;
    factor(t);
    while (!at_end() && peek() == '*') {
      ++pos_;
      factor(t);
    }
    return t;
  }

  void factor(Polynomial::Term& t) {
    skip();
    if (at_end()) fail("unexpected end of expression");
    const char ch = peek();
    if (std::isdigit(static_cast<unsigned char>(ch)) || ch == '.') {
      std::size_t end = pos_;
      while (end < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[end])) ||
                                 s_[end] == '.' || s_[end] == 'e' || s_[end] == 'E' ||
                                 ((s_[end] == '-' || s_[end] == '+') && end > pos_ &&
                                  (s_[end - 1] == 'e' || s_[end - 1] == 'E'))))
        ++end;
      double v = 0.0;
      auto [p, ec] = std::from_chars(s_.data() + pos_, s_.data() + end, v);
      if (ec != std::errc{} || p != s_.data() + end) fail("bad number");
      t.coefficient *= v;
      pos_ = end;
    } else if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') {
      std::size_t end = pos_;
      while (end < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[end])) || s_[end] == '_'))
        ++end;
      std::string name(s_.substr(pos_, end - pos_));
      pos_ = end;
      int power = 1;
      skip();
      if (!at_end() && peek() == '^') {
        ++pos_;
        skip();
        std::size_t pend = pos_;
        while (pend < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pend]))) ++pend;
        if (pend == pos_) fail("expected an integer exponent");
        std::from_chars(s_.data() + pos_, s_.data() + pend, power);
        pos_ = pend;
      }
      t.powers[name] += power;
    } else {
      fail(std::string("unexpected character '") + ch + "'");
    }
    skip();
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool at_end() {
    skip();
    return pos_ >= s_.size();
  }
  char peek() const { return s_[pos_]; }
  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::invalid_argument, "cannot parse polynomial '" + std::string(s_) + "'",
                what + " at offset " + std::to_string(pos_));
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

}  // namespace

Polynomial Polynomial::parse(std::string_view text) {
  Polynomial p;
  p.terms_ = PolyParser(text).parse();
  return p;
}

std::vector<std::string> Polynomial::variables() const {
  std::vector<std::string> out;
  for (const auto& t : terms_)
    for (const auto& [v, _] : t.powers)
      if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
  return out;
}

std::string Polynomial::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    const auto& t = terms_[i];
    double c = t.coefficient;
    if (i > 0) {
      out += c < 0 ? " - " : " + ";
      c = std::abs(c);
    } else if (c < 0) {
      out += "-";
      c = -c;
    }
    std::string body;
    for (const auto& [v, pw] : t.powers) {
      if (!body.empty()) body += "*";
      body += v;
      if (pw != 1) body += "^" + std::to_string(pw);
    }
    if (body.empty())
      out += format_double(c);
    else if (c == 1.0)
      out += body;
    else
      out += format_double(c) + "*" + body;
  }
  return out;
}

double Polynomial::evaluate(const std::map<std::string, double>& values) const {
  double sum = 0.0;
  for (const auto& t : terms_) {
    double prod = t.coefficient;
    for (const auto& [v, pw] : t.powers) {
      const auto it = values.find(v);
      if (it == values.end()) throw Error(ErrorCode::not_found, "polynomial variable '" + v + "' unbound");
      for (int k = 0; k < pw; ++k) prod *= it->second;
    }
    sum += prod;
  }
  return sum;
}

std::function<double(std::span<const double>)> Polynomial::bind(const Dataset& ds) const {
  struct BoundTerm {
    double coefficient;
    std::vector<std::pair<std::size_t, int>> powers;
  };
  std::vector<BoundTerm> bound;
  for (const auto& t : terms_) {
    BoundTerm b{t.coefficient, {}};
    for (const auto& [v, pw] : t.powers) b.powers.emplace_back(ds.feature_index(v), pw);
    bound.push_back(std::move(b));
  }
  return [bound = std::move(bound)](std::span<const double> row) {
    double sum = 0.0;
    for (const auto& t : bound) {
      double prod = t.coefficient;
      for (const auto& [f, pw] : t.powers)
        for (int k = 0; k < pw; ++k) prod *= row[f];
      sum += prod;
    }
    return sum;
  };
}

// --- rng --------------------------------------------------------------------------

std::uint64_t SplitMix64::next() noexcept {
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double SplitMix64::uniform() noexcept {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

double SplitMix64::normal() noexcept {
  // Box-Muller; one draw per call keeps the stream position simple.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// --- synthetic tables ---------------------------------------------------------------

Polynomial SynthSpec::polynomial() const {
  if (features.size() < 2)
    throw Error(ErrorCode::invalid_argument, "synthetic data needs at least two features");
  const auto& a = features[0];
  const auto& b = features[1];
  if (function == "additive") return Polynomial::parse(a + " + " + b);
  if (function == "product") return Polynomial::parse(a + " + " + b + " + " + a + "*" + b);
  if (function == "constant") return Polynomial::parse(format_double(constant));
  if (function == "custom-polynomial") {
    if (expression.empty())
      throw Error(ErrorCode::invalid_argument, "custom-polynomial needs an expression");
    auto p = Polynomial::parse(expression);
    for (const auto& v : p.variables())
      if (std::find(features.begin(), features.end(), v) == features.end())
        throw Error(ErrorCode::invalid_argument, "expression uses unknown feature '" + v + "'");
    return p;
  }
  throw Error(ErrorCode::invalid_argument, "unknown synthetic function '" + function + "'",
              "expected additive | product | constant | custom-polynomial");
}

SynthTable generate_synthetic(const SynthSpec& spec) {
  if (spec.rows == 0) throw Error(ErrorCode::invalid_argument, "synthetic data needs at least one row");
  for (std::size_t i = 0; i < spec.features.size(); ++i)
    for (std::size_t k = i + 1; k < spec.features.size(); ++k)
      if (spec.features[i] == spec.features[k])
        throw Error(ErrorCode::invalid_argument, "duplicate feature '" + spec.features[i] + "'");
  const Polynomial poly = spec.polynomial();

  const std::size_t nf = spec.features.size();
  const auto levels = static_cast<double>(spec.levels);
  auto snap = [&](double u) {
    if (spec.levels == 0) return u;
    const double bin = std::min(std::floor(u * levels), levels - 1.0);
    return (bin + 0.5) / levels;
  };

  std::ostringstream csv;
  for (const auto& f : spec.features) csv << f << ',';
  csv << "prediction,truth\n";

  SplitMix64 rng(spec.seed);
  std::map<std::string, double> point;
  std::vector<double> raw(nf);
  for (std::size_t r = 0; r < spec.rows; ++r) {
    for (std::size_t f = 0; f < nf; ++f) raw[f] = rng.uniform();
    if (spec.correlation_noise > 0.0)
      raw[1] = std::clamp(raw[0] + spec.correlation_noise * rng.normal(), 0.0, 1.0);
    for (std::size_t f = 0; f < nf; ++f) {
      const double v = snap(raw[f]);
      point[spec.features[f]] = v;
      csv << format_double(v) << ',';
    }
    const std::string y = format_double(poly.evaluate(point));
    csv << y << ',' << y << '\n';
  }

  nlohmann::json schema = nlohmann::json::object();
  for (const auto& f : spec.features) schema[f] = "feature";
  schema["prediction"] = "prediction:value";
  schema["truth"] = "truth";

  nlohmann::json meta = {
      {"function", spec.function},
      {"expression", poly.to_string()},
      {"rows", spec.rows},
      {"seed", spec.seed},
      {"levels", spec.levels},
      {"features", spec.features},
      {"correlation_noise", spec.correlation_noise},
  };
  return {csv.str(), schema.dump(2) + "\n", meta.dump(2) + "\n"};
}

SynthSpec SynthSpec::from_json_text(const std::string& text) {
  SynthSpec spec;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse, "synthetic spec is not valid JSON", e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::invalid_argument, "synthetic spec must be an object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "function") spec.function = v.get<std::string>();
      else if (key == "expression") spec.expression = v.get<std::string>();
      else if (key == "constant") spec.constant = v.get<double>();
      else if (key == "rows") spec.rows = v.get<std::size_t>();
      else if (key == "seed") spec.seed = v.get<std::uint64_t>();
      else if (key == "levels") spec.levels = v.get<std::size_t>();
      else if (key == "features") spec.features = v.get<std::vector<std::string>>();
      else if (key == "correlation_noise") spec.correlation_noise = v.get<double>();
      else throw Error(ErrorCode::invalid_argument, "unknown synthetic spec key '" + key + "'");
    }
  } catch (const nlohmann::json::type_error& e) {
    throw Error(ErrorCode::invalid_argument, "synthetic spec has a value of the wrong type", e.what());
  }
  return spec;
}

std::string schema_sidecar_path(const std::string& data_path) {
  fs::path p(data_path);
  p.replace_extension(".schema.json");
  return p.string();
}

std::string synth_sidecar_path(const std::string& data_path) {
  fs::path p(data_path);
  p.replace_extension(".synth.json");
  return p.string();
}

void write_file_atomic(const std::string& path, std::string_view content) {
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp-" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io, "cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw Error(ErrorCode::io, "write to '" + tmp.string() + "' failed");
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorCode::io, "cannot rename onto '" + path + "'", ec.message());
  }
}

void write_synthetic(const SynthSpec& spec, const std::string& out_path) {
  const SynthTable t = generate_synthetic(spec);
  write_file_atomic(out_path, t.csv);
  write_file_atomic(schema_sidecar_path(out_path), t.schema_json);
  write_file_atomic(synth_sidecar_path(out_path), t.meta_json);
}

// --- pdp ---------------------------------------------------------------------------

std::vector<double> classic_pdp_oracle(const Dataset& ds,
                                       const std::function<double(std::span<const double>)>& predict,
                                       std::size_t feature, std::span<const double> grid) {
  if (feature >= ds.feature_count()) throw Error(ErrorCode::not_found, "feature index out of range");
  std::vector<double> out;
  out.reserve(grid.size());
  std::vector<double> row(ds.feature_count());
  for (const double v : grid) {
    double sum = 0.0;
    for (std::size_t r = 0; r < ds.rows(); ++r) {
      for (std::size_t f = 0; f < ds.feature_count(); ++f) row[f] = ds.column(f)[r];
      row[feature] = v;
      sum += predict(row);
    }
    out.push_back(sum / static_cast<double>(ds.rows()));
  }
  return out;
}

PdpComparison pdp_compare(const std::string& data_path, std::string_view feature,
                          const Config& config) {
  const std::string meta_path = synth_sidecar_path(data_path);
  std::ifstream meta_in(meta_path, std::ios::binary);
  if (!meta_in)
    throw Error(ErrorCode::invalid_argument,
                "'" + data_path + "' has no generating function (missing " + meta_path + ")",
                "classic PDP needs model predictions for mutated rows; only synthetic tables "
                "carry the function required to produce them");
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(meta_in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse, "cannot read '" + meta_path + "'", e.what());
  }
  if (!meta.contains("expression") || !meta["expression"].is_string())
    throw Error(ErrorCode::invalid_argument, "'" + meta_path + "' has no expression");

  std::ifstream schema_in(schema_sidecar_path(data_path), std::ios::binary);
  if (!schema_in) throw Error(ErrorCode::io, "missing schema sidecar for '" + data_path + "'");
  std::ostringstream ss;
  ss << schema_in.rdbuf();
  const Dataset ds = load_table_file(data_path, Schema::from_json_text(ss.str()), config);

  const auto f = ds.feature_index(feature);
  const auto target = resolve_target(ds, TargetSpec{});
  const Polynomial poly = Polynomial::parse(meta["expression"].get<std::string>());

  PdpComparison out;
  out.feature = std::string(feature);
  out.expression = poly.to_string();
  const auto curve = compute_curve(ds, all_rows(ds), f, target, {false, config.smoothing});
  out.grid = curve.x;
  out.engine = curve.mean;
  out.pdp = classic_pdp_oracle(ds, poly.bind(ds), f, out.grid);
  for (std::size_t i = 0; i < out.grid.size(); ++i)
    out.max_abs_gap = std::max(out.max_abs_gap, std::abs(out.engine[i] - out.pdp[i]));
  return out;
}

}  // namespace finch
