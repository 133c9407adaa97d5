#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "ltce/dataset.hpp"
#include "ltce/dgp.hpp"

using namespace ltce;

namespace {

IndicatorMatrix indicators(std::initializer_list<std::initializer_list<int>> rows) {
  IndicatorMatrix r(static_cast<Index>(rows.size()), static_cast<Index>(rows.begin()->size()));
  Index i = 0;
  for (const auto& row : rows) {
    Index j = 0;
    for (int v : row) r(i, j++) = static_cast<std::uint8_t>(v);
    ++i;
  }
  return r;
}

std::string temp_file(const std::string& name, const std::string& body) {
  std::filesystem::create_directories(LTCE_TEST_TMP);
  const std::string path = std::string(LTCE_TEST_TMP) + "/" + name;
  std::ofstream(path) << body;
  return path;
}

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("validate_monotone accepts non-increasing rows") {
  CHECK_FALSE(validate_monotone(indicators({{1, 1, 1}, {1, 1, 0}, {1, 0, 0}, {0, 0, 0}})).has_value());
  CHECK_FALSE(validate_monotone(IndicatorMatrix(0, 3)).has_value());
}

TEST_CASE("validate_monotone reports the first violating pair") {
  const auto v = validate_monotone(indicators({{1, 1, 1}, {1, 0, 1}}));
  REQUIRE(v.has_value());
  CHECK(v->unit == 1);
  CHECK(v->stage == 2);
  CHECK(v->later_stage == 3);
}

TEST_CASE("create enforces presence and monotonicity") {
  Matrix x = Matrix::Zero(2, 1);
  IntVector a(2);
  a << 0, 1;
  std::vector<OutcomeColumn> out{{1.0, 2.0}, {3.0, std::nullopt}};
  CHECK_NOTHROW(LongTermDataset::create(x, a, out, indicators({{1, 1}, {1, 0}})));
  CHECK_THROWS_AS(LongTermDataset::create(x, a, out, indicators({{1, 1}, {1, 1}})), PresenceError);
  std::vector<OutcomeColumn> gap{{1.0, std::nullopt}, {3.0, 4.0}};
  CHECK_THROWS_AS(LongTermDataset::create(x, a, gap, indicators({{1, 1}, {0, 1}})), MonotoneViolationError);
  IntVector bad(2);
  bad << 0, 2;
  CHECK_THROWS_AS(LongTermDataset::create(x, bad, out, indicators({{1, 1}, {1, 0}})), DataError);
  CHECK_THROWS_AS(LongTermDataset::create(x, a, {{1.0, 2.0}}, indicators({{1}, {1}})), ShapeError);
}

TEST_CASE("observed_subset returns nested R_t = 1 sets") {
  Matrix x = Matrix::Zero(2, 1);
  IntVector a = IntVector::Zero(2);
  std::vector<OutcomeColumn> out{{1.0, 2.0}, {3.0, std::nullopt}, {std::nullopt, std::nullopt}};
  const auto ds = LongTermDataset::create(x, a, out, indicators({{1, 1, 0}, {1, 0, 0}}));
  CHECK(observed_subset(ds, 2) == std::vector<Index>{0});
  CHECK(observed_subset(ds, 1) == std::vector<Index>{0, 1});
  CHECK(observed_subset(ds, 3).empty());
  CHECK_THROWS(observed_subset(ds, 4));

  DgpConfig cfg;
  cfg.n = 300;
  cfg.p = 4;
  cfg.gamma = 0.2;
  cfg.stages = 4;
  cfg.tau_x_draws = 10;
  cfg.seed = 5;
  const auto sample = simulate(cfg);
  for (int t = 2; t <= 4; ++t) {
    const auto later = observed_subset(sample.data, t);
    const auto earlier = observed_subset(sample.data, t - 1);
    CHECK(std::includes(earlier.begin(), earlier.end(), later.begin(), later.end()));
  }
}

TEST_CASE("load_csv reads a small panel with empty cells for missing outcomes") {
  const auto path = temp_file("four.csv",
                              "x1,x2,a,s1,s2,y,r1,r2,r3\n"
                              "0.5,1,1,1,2.5,3.25,1,1,1\n"
                              "-1,0,0,0,1.5,,1,1,0\n"
                              "2,1,1,1,,,1,0,0\n"
                              "0,0,0,,,,0,0,0\n");
  const auto ds = load_csv(path);
  CHECK(ds.size() == 4);
  CHECK(ds.stages() == 3);
  CHECK(ds.num_covariates() == 2);
  CHECK(ds.value(0, 3) == 3.25);
  CHECK_FALSE(ds.outcome(3)[1].has_value());
  CHECK(ds.is_observed(1, 2));
  CHECK_FALSE(ds.is_observed(2, 2));
}

TEST_CASE("load_csv rejects presence and monotone breaches with locations") {
  const auto present = temp_file("present.csv",
                                 "x1,a,s1,s2,y,r1,r2,r3\n"
                                 "0,1,1,2,3,1,1,1\n"
                                 "0,1,1,2,,1,0,0\n");
  CHECK_THROWS_AS(load_csv(present), PresenceError);

  const auto monotone = temp_file("monotone.csv",
                                  "x1,a,s1,s2,y,r1,r2,r3\n"
                                  "0,1,1,,3,1,0,1\n");
  try {
    load_csv(monotone);
    FAIL("expected a monotone violation");
  } catch (const MonotoneViolationError& e) {
    CHECK(e.violation().unit == 0);
    CHECK(e.violation().stage == 2);
  }

  const auto garbled = temp_file("garbled.csv",
                                 "x1,a,s1,y,r1,r2\n"
                                 "0,1,abc,1,1,1\n");
  try {
    load_csv(garbled);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.row() == 1);
    CHECK(e.column() == "s1");
  }

  const auto no_x = temp_file("nox.csv",
                              "x1,a,s1,y,r1,r2\n"
                              ",1,1,1,1,1\n");
  CHECK_THROWS_AS(load_csv(no_x), ParseError);
}

TEST_CASE("write_csv then load_csv round-trips exactly") {
  DgpConfig cfg = DgpConfig::defaults(OutcomeStyle::BinaryMix);
  cfg.n = 120;
  cfg.p = 5;
  cfg.gamma = 0.3;
  cfg.tau_x_draws = 5;
  cfg.seed = 11;
  const auto sample = simulate(cfg);
  const std::string path = std::string(LTCE_TEST_TMP) + "/roundtrip.csv";
  std::filesystem::create_directories(LTCE_TEST_TMP);
  write_csv(sample.data, path);
  CHECK(load_csv(path) == sample.data);
}

TEST_CASE("datasets are transformed by copy") {
  Matrix x = Matrix::Zero(2, 1);
  IntVector a = IntVector::Zero(2);
  const auto full = LongTermDataset::from_outcomes(x, a, {{1.0, 2.0}, {3.0, 4.0}});
  const auto masked = full.with_observed(indicators({{1, 1}, {1, 0}}));
  CHECK(full.value(1, 2) == 4.0);
  CHECK_FALSE(masked.outcome(2)[1].has_value());
  const auto sub = full.subset({1});
  CHECK(sub.size() == 1);
  CHECK(sub.value(0, 1) == 2.0);
}

}  // TEST_SUITE
