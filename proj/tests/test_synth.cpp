// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "error.hpp"
#include "json.hpp"
#include "support.hpp"
#include "synth.hpp"

using namespace finch;

namespace {

Dataset load(const SynthTable& t) {
  std::istringstream in(t.csv);
  return load_table(in, Schema::from_json_text(t.schema_json));
}

}  // namespace

TEST_CASE("splitmix64 reference stream") {
  SplitMix64 g(0);
  CHECK(g.next() == 0xe220a8397b1dcdafULL);
  CHECK(g.next() == 0x6e789e6aa1b965f4ULL);
  SplitMix64 u(99);
  for (int i = 0; i < 1000; ++i) {
    const double x = u.uniform();
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
  }
}

TEST_CASE("normal draws have unit moments") {
  SplitMix64 g(5);
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = g.normal();
    s += x;
    s2 += x * x;
  }
  CHECK(std::abs(s / n) < 0.01);
  CHECK(std::abs(s2 / n - 1.0) < 0.02);
}

TEST_CASE("polynomials parse, print and evaluate") {
  const auto p = Polynomial::parse("2.5*x^2*z - 0.3*w + 1");
  CHECK(p.evaluate({{"x", 2}, {"z", 3}, {"w", 10}}) == doctest::Approx(2.5 * 4 * 3 - 3 + 1));
  CHECK(p.variables() == std::vector<std::string>{"x", "z", "w"});
  const auto again = Polynomial::parse(p.to_string());
  CHECK(again.evaluate({{"x", 0.5}, {"z", -1}, {"w", 4}}) == p.evaluate({{"x", 0.5}, {"z", -1}, {"w", 4}}));
  CHECK(Polynomial::parse("x + z + x*z").evaluate({{"x", 0.5}, {"z", 0.9}}) == doctest::Approx(1.85));
  CHECK(Polynomial::parse("-x").evaluate({{"x", 2}}) == -2);
  CHECK(Polynomial::parse("3").evaluate({}) == 3);
  for (const char* bad : {"", "x +", "2**x", "x^", "x^-1", "(x)"}) CHECK_THROWS_AS(Polynomial::parse(bad), Error);
}

TEST_CASE("generation is deterministic and quantized") {
  SynthSpec spec;
  spec.rows = 2000;
  const auto a = generate_synthetic(spec);
  const auto b = generate_synthetic(spec);
  CHECK(a.csv == b.csv);
  CHECK(a.meta_json == b.meta_json);
  spec.seed = 8;
  CHECK(generate_synthetic(spec).csv != a.csv);
  CHECK(a.csv.rfind("x,z,w,prediction,truth\n", 0) == 0);

  const auto ds = load(a);
  CHECK(ds.rows() == 2000);
  for (std::size_t f = 0; f < 3; ++f) {
    CHECK(ds.levels(f).size() == 10);
    for (const double v : ds.levels(f)) CHECK(std::abs(v * 10 - std::round(v * 10 - 0.5) - 0.5) < 1e-9);
  }
  const auto meta = nlohmann::json::parse(a.meta_json);
  CHECK(meta["expression"] == "x + z + x*z");
  // truth equals the prediction for generated data
  const auto& y = ds.values(ds.prediction_columns()[0]).values;
  const auto& t = ds.values(*ds.truth_column()).values;
  CHECK(y == t);
}

TEST_CASE("function variants and validation") {
  SynthSpec spec;
  spec.rows = 100;
  spec.function = "constant";
  spec.constant = 2.0;
  const auto ds = load(generate_synthetic(spec));
  for (const double v : ds.values(ds.prediction_columns()[0]).values) CHECK(v == 2.0);

  spec.function = "custom-polynomial";
  spec.expression = "x*w";
  CHECK(nlohmann::json::parse(generate_synthetic(spec).meta_json)["expression"] == "w*x");
  spec.expression = "x*q";
  CHECK_THROWS_AS(generate_synthetic(spec), Error);
  spec.function = "sideways";
  CHECK_THROWS_AS(generate_synthetic(spec), Error);
  spec.function = "product";
  spec.features = {"x"};
  CHECK_THROWS_AS(generate_synthetic(spec), Error);
  spec.features = {"x", "x"};
  CHECK_THROWS_AS(generate_synthetic(spec), Error);

  CHECK(SynthSpec::from_json_text(R"({"rows": 5, "function": "additive"})").rows == 5);
  CHECK_THROWS_AS(SynthSpec::from_json_text(R"({"rowz": 5})"), Error);
  CHECK_THROWS_AS(SynthSpec::from_json_text(R"({"rows": "five"})"), Error);
}

TEST_CASE("additive expectation matches the uniform mean") {
  SynthSpec spec;
  spec.function = "additive";
  spec.rows = 10000;
  const auto ds = load(generate_synthetic(spec));
  CHECK(std::abs(ds.global_mean(ds.prediction_columns()[0]) - 1.0) <= 0.02);
}

TEST_CASE("correlation noise couples the second feature to the first") {
  SynthSpec spec;
  spec.rows = 5000;
  spec.levels = 0;
  spec.correlation_noise = 0.05;
  const auto ds = load(generate_synthetic(spec));
  double sxy = 0, sx = 0, sy = 0, sxx = 0, syy = 0;
  const double n = static_cast<double>(ds.rows());
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    const double x = ds.column(0)[r], z = ds.column(1)[r];
    sx += x; sy += z; sxy += x * z; sxx += x * x; syy += z * z;
  }
  const double corr = (sxy / n - sx / n * sy / n) /
                      std::sqrt((sxx / n - sx * sx / n / n) * (syy / n - sy * sy / n / n));
  CHECK(corr > 0.95);
}

TEST_CASE("files, sidecars and the mutation oracle") {
  testing::TempDir dir;
  const auto path = dir.file("add.csv");
  SynthSpec spec;
  spec.function = "additive";
  write_synthetic(spec, path);
  CHECK(std::filesystem::exists(schema_sidecar_path(path)));
  CHECK(std::filesystem::exists(synth_sidecar_path(path)));
  CHECK(schema_sidecar_path(path) == dir.file("add.schema.json"));

  const auto cmp = pdp_compare(path, "x");
  CHECK(cmp.grid.size() == 10);
  CHECK(cmp.max_abs_gap <= 0.05);

  SynthSpec flat;
  flat.function = "constant";
  write_synthetic(flat, dir.file("flat.csv"));
  CHECK(pdp_compare(dir.file("flat.csv"), "z").max_abs_gap == 0.0);

  // Mutation oracle against a direct loop.
  const auto ds = load_table_file(path, Schema::from_json_text(generate_synthetic(spec).schema_json));
  const auto poly = Polynomial::parse("x + z");
  const double grid[] = {0.05, 0.55};
  const auto pdp = classic_pdp_oracle(ds, poly.bind(ds), 0, grid);
  for (std::size_t g = 0; g < 2; ++g) {
    double s = 0;
    for (std::size_t r = 0; r < ds.rows(); ++r) s += grid[g] + ds.column(1)[r];
    CHECK(pdp[g] == doctest::Approx(s / static_cast<double>(ds.rows())));
  }
  CHECK_THROWS_AS(Polynomial::parse("q").bind(ds), Error);

  std::filesystem::remove(synth_sidecar_path(path));
  try {
    pdp_compare(path, "x");
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::invalid_argument);
  }
}

TEST_CASE("atomic writes leave no temporaries") {
  testing::TempDir dir;
  write_file_atomic(dir.file("a.txt"), "one");
  write_file_atomic(dir.file("a.txt"), "two");
  std::ifstream in(dir.file("a.txt"));
  std::string s;
  in >> s;
  CHECK(s == "two");
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir.path)) ++files;
  CHECK(files == 1);
  CHECK_THROWS_AS(write_file_atomic(dir.file("missing/dir/a.txt"), "x"), Error);
}
