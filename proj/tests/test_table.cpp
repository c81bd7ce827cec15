// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "config.hpp"
#include "error.hpp"
#include "support.hpp"
#include "table.hpp"

using namespace finch;
using testing::csv_dataset;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::internal;
}

}  // namespace

TEST_CASE("load assigns roles and computes feature metadata") {
  const auto ds = csv_dataset("a,b,p,t,junk\n1,10,0.5,0.4,x\n2,20,0.7,0.6,y\n3,30,0.9,1.1,z\n",
                              "a=feature,b=feature,p=prediction,t=truth,junk=ignore");
  CHECK(ds.rows() == 3);
  REQUIRE(ds.feature_count() == 2);
  CHECK(ds.feature(0).name == "a");
  CHECK(ds.feature(1).min == 10);
  CHECK(ds.feature(1).max == 30);
  CHECK(ds.feature(1).mean == doctest::Approx(20));
  REQUIRE(ds.prediction_columns().size() == 1);
  CHECK(ds.global_mean(ds.prediction_columns()[0]) == doctest::Approx(0.7));
  REQUIRE(ds.truth_column());
  CHECK(ds.values(*ds.truth_column()).name == "t");
}

TEST_CASE("quoted cells and CRLF line endings") {
  const auto ds = csv_dataset("\"a\",b,y\r\n\"1.5\",2,3\r\n4,\"5\",6\r\n", "a=feature,b=feature,y=prediction");
  CHECK(ds.rows() == 2);
  CHECK(ds.column(0)[0] == 1.5);
  CHECK(ds.column(1)[1] == 5);
}

TEST_CASE("rows with empty role cells are dropped and counted") {
  const auto ds = csv_dataset("a,b,y,note\n1,2,3,\n,2,3,k\n4,NA,6,k\n7,8,9,k\n",
                              "a=feature,b=feature,y=prediction,note=ignore");
  CHECK(ds.rows() == 2);
  CHECK(ds.rejected_rows() == 2);
}

TEST_CASE("malformed input is reported with a code") {
  SUBCASE("non-numeric cell names row and column") {
    try {
      csv_dataset("a,y\n1,2\nfoo,3\n", "a=feature,y=prediction");
      FAIL("no throw");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::parse);
      const std::string all = std::string(e.what()) + " " + e.detail();
      CHECK(all.find("'a'") != std::string::npos);
      CHECK(all.find("foo") != std::string::npos);
    }
  }
  SUBCASE("schema column absent from table") {
    CHECK(code_of([] { csv_dataset("a,y\n1,2\n", "a=feature,y=prediction,q=feature"); }) ==
          ErrorCode::schema);
  }
  SUBCASE("no prediction column") {
    CHECK(code_of([] { csv_dataset("a,y\n1,2\n", "a=feature,y=ignore"); }) == ErrorCode::schema);
  }
  SUBCASE("no feature column") {
    CHECK(code_of([] { csv_dataset("a,y\n1,2\n", "a=ignore,y=prediction"); }) == ErrorCode::schema);
  }
  SUBCASE("header only") {
    CHECK(code_of([] { csv_dataset("a,y\n", "a=feature,y=prediction"); }) == ErrorCode::empty_data);
  }
  SUBCASE("class probabilities outside [0,1]") {
    CHECK(code_of([] { csv_dataset("a,p,q\n1,0.2,1.8\n", "a=feature,p=prediction:p,q=prediction:q"); }) ==
          ErrorCode::schema);
  }
  SUBCASE("unknown role") {
    CHECK(code_of([] { ColumnRole::parse("banana"); }) == ErrorCode::schema);
  }
}

TEST_CASE("feature kind follows the distinct-value threshold") {
  std::ostringstream csv;
  csv << "few,many,y\n";
  for (int r = 0; r < 200; ++r) csv << (r % 24) << ',' << (r % 25) << ',' << r << '\n';
  const auto ds = csv_dataset(csv.str(), "few=feature,many=feature,y=prediction");
  CHECK(ds.feature(0).kind == FeatureKind::categorical);
  CHECK(ds.feature(0).categories.size() == 24);
  CHECK(ds.feature(1).kind == FeatureKind::continuous);
}

TEST_CASE("normalization maps the observed range onto [0,1]") {
  const auto ds = csv_dataset("a,c,y\n-2,5,0\n0,5,0\n6,5,0\n", "a=feature,c=feature,y=prediction");
  CHECK(ds.normalized(0)[0] == 0.0);
  CHECK(ds.normalized(0)[2] == 1.0);
  CHECK(ds.normalized(0)[1] == doctest::Approx(0.25));
  CHECK(ds.normalized(1)[0] == 0.0);  // constant column
  CHECK(normalize_value(ds, "a", 100.0) == 1.0);
  CHECK(normalize_value(ds, "a", -100.0) == 0.0);
}

TEST_CASE("property: normalized values stay in [0,1] and preserve order") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    std::normal_distribution<double> g(rng() % 100, 1 + rng() % 50);
    std::ostringstream csv;
    csv.precision(17);
    csv << "a,y\n";
    const int n = 2 + static_cast<int>(rng() % 200);
    for (int r = 0; r < n; ++r) csv << g(rng) << ",0\n";
    const auto ds = csv_dataset(csv.str(), "a=feature,y=prediction");
    const auto raw = ds.column(0);
    const auto nv = ds.normalized(0);
    for (std::size_t i = 0; i < raw.size(); ++i) {
      CHECK(nv[i] >= 0.0);
      CHECK(nv[i] <= 1.0);
      for (std::size_t k = 0; k < raw.size(); k += 7)
        if (raw[i] < raw[k]) CHECK(nv[i] <= nv[k]);
    }
  }
}

TEST_CASE("instances from rows and partial values") {
  const auto ds = csv_dataset("a,b,y\n1,10,0\n3,30,1\n", "a=feature,b=feature,y=prediction");
  const auto r = instance_from_row(ds, 1);
  CHECK(r.values == std::vector<double>{3, 30});
  CHECK(r.source_row == 1u);
  CHECK(r.imputed_features.empty());
  CHECK_THROWS_AS(instance_from_row(ds, 2), Error);

  const auto p = impute_instance({{"a", 7.0}}, ds);
  CHECK(p.values == std::vector<double>{7, 20});
  CHECK(p.is_custom());
  CHECK(p.imputed_features == std::set<std::string>{"b"});

  const auto none = impute_instance(std::map<std::string, double>{}, ds);
  CHECK(none.values == std::vector<double>{2, 20});
  CHECK(none.imputed_features.size() == 2);

  CHECK(code_of([&] { impute_instance({{"zz", 1.0}}, ds); }) == ErrorCode::not_found);
}

TEST_CASE("property: imputation is idempotent") {
  const auto ds = csv_dataset("a,b,c,y\n1,10,5,0\n3,30,7,1\n8,2,1,0\n",
                              "a=feature,b=feature,c=feature,y=prediction");
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::map<std::string, double> partial;
    for (const char* name : {"a", "b", "c"})
      if (rng() % 2) partial[name] = static_cast<double>(rng() % 1000) / 10.0;
    const auto once = impute_instance(partial, ds);
    const auto twice = impute_instance(once, ds);
    CHECK(once == twice);
    InstanceVector holes = once;
    for (auto& v : holes.values)
      if (rng() % 3 == 0) v = std::nan("");
    const auto refilled = impute_instance(holes, ds);
    for (std::size_t f = 0; f < 3; ++f) CHECK(std::isfinite(refilled.values[f]));
  }
}

TEST_CASE("target resolution") {
  const auto ds = csv_dataset("a,p_cat,p_dog,y\n1,0.2,0.8,1\n2,0.6,0.4,0\n",
                              "a=feature,p_cat=prediction:cat,p_dog=prediction:dog,y=truth");
  CHECK(target_options(ds) == std::vector<std::string>{"cat", "dog"});
  TargetSpec t{TargetMode::classification, std::string("dog"), "dog"};
  CHECK(ds.global_mean(resolve_target(ds, t)) == doctest::Approx(0.6));
  t.class_label = "fish";
  try {
    resolve_target(ds, t);
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::not_found);
    CHECK(e.detail().find("cat") != std::string::npos);
  }
  CHECK_THROWS_AS(resolve_target(ds, TargetSpec{}), Error);  // regression needs one column
}

TEST_CASE("schema parsing") {
  const auto s = Schema::from_json_text(R"({"columns": {"a": "feature", "p": "prediction:yes", "*": "ignore"}})");
  CHECK(s.default_role.kind == RoleKind::ignore);
  CHECK(s.roles.at("p").label == "yes");
  const auto bare = Schema::from_json_text(R"({"a": "feature", "p": "prediction"})");
  CHECK(bare.roles.at("p").kind == RoleKind::prediction);
  CHECK(Schema::from_json_text(s.to_json_text()).roles.size() == s.roles.size());
  CHECK(code_of([] { Schema::from_json_text("{"); }) == ErrorCode::schema);
}

TEST_CASE("config overrides and rejects unknown keys") {
  const auto c = Config::from_json_text(R"({"subset_min_rows": 7, "threads": 2})");
  CHECK(c.subset.min_rows == 7);
  CHECK(c.effective_threads() == 2);
  CHECK(Config::from_json_text(c.to_json_text()).subset.min_rows == 7);
  CHECK(code_of([] { Config::from_json_text(R"({"subset_min_rowz": 7})"); }) == ErrorCode::invalid_argument);
  CHECK(Config{}.effective_threads() >= 1);
}
