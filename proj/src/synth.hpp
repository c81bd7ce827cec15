// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "table.hpp"

namespace finch {

/// Sum of monomials, e.g. "x + z + x*z" or "2.5*x^2*z - 0.3*w + 1".
class Polynomial {
 public:
  struct Term {
    double coefficient = 0.0;
    std::map<std::string, int> powers;  // variable -> exponent
  };

  static Polynomial parse(std::string_view text);

  const std::vector<Term>& terms() const noexcept { return terms_; }
  std::vector<std::string> variables() const;
  std::string to_string() const;

  double evaluate(const std::map<std::string, double>& values) const;
  /// Evaluator over dataset rows; variables bind to feature columns by name.
  /// Throws not_found when a variable is not a dataset feature.
  std::function<double(std::span<const double>)> bind(const Dataset& ds) const;

 private:
  std::vector<Term> terms_;
};

/// Deterministic 64-bit generator with platform-independent uniform and
/// normal draws (the standard distributions are implementation-defined).
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() noexcept;
  double uniform() noexcept;  // [0, 1)
  double normal() noexcept;

 private:
  std::uint64_t state_;
};

struct SynthSpec {
  std::string function = "product";  // additive | product | constant | custom-polynomial
  std::string expression;            // custom-polynomial only
  double constant = 2.0;             // constant only
  std::size_t rows = 10000;
  std::uint64_t seed = 7;
  /// Features are drawn U(0,1) and snapped to the midpoints of this many equal
  /// bins, so every x value is shared by many rows. 0 keeps raw draws.
  std::size_t levels = 10;
  std::vector<std::string> features{"x", "z", "w"};
  /// When > 0, the second feature is x + N(0, noise) clamped to [0,1].
  double correlation_noise = 0.0;

  Polynomial polynomial() const;
  /// Keys mirror the fields; unknown keys are rejected.
  static SynthSpec from_json_text(const std::string& text);
};

struct SynthTable {
  std::string csv;
  std::string schema_json;
  std::string meta_json;  // SynthSpec plus the resolved expression
};

SynthTable generate_synthetic(const SynthSpec& spec);

/// Writes `<out>`, `<stem>.schema.json` and `<stem>.synth.json`, each atomically.
void write_synthetic(const SynthSpec& spec, const std::string& out_path);

std::string schema_sidecar_path(const std::string& data_path);
std::string synth_sidecar_path(const std::string& data_path);

/// Mutation-based partial dependence: for each grid value v, the mean over all
/// rows of predict(row with feature := v).
std::vector<double> classic_pdp_oracle(const Dataset& ds,
                                       const std::function<double(std::span<const double>)>& predict,
                                       std::size_t feature, std::span<const double> grid);

struct PdpComparison {
  std::string feature;
  std::string expression;
  std::vector<double> grid;
  std::vector<double> engine;  // step-0 curve, unsmoothed
  std::vector<double> pdp;
  double max_abs_gap = 0.0;
};

/// Needs the `.synth.json` sidecar; throws invalid_argument without it.
PdpComparison pdp_compare(const std::string& data_path, std::string_view feature,
                          const Config& config = {});

/// Writes to a temporary sibling and renames over `path`.
void write_file_atomic(const std::string& path, std::string_view content);

}  // namespace finch
