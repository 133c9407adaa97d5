#include <doctest.h>

#include <cmath>

#include "ltce/dgp.hpp"
#include "ltce/nuisance.hpp"

using namespace ltce;

namespace {

SyntheticSample sample(Index n, double gamma, double theta_scale, std::uint64_t seed) {
  DgpConfig cfg;
  cfg.n = n;
  cfg.p = 5;
  cfg.gamma = gamma;
  cfg.stages = 3;
  cfg.treatment_coef_scale = theta_scale;
  cfg.tau_x_draws = 5;
  cfg.seed = seed;
  return simulate(cfg);
}

}  // namespace

TEST_SUITE("nuisance") {

TEST_CASE("randomized treatment gives a flat propensity") {
  const auto s = sample(20000, 0.1, 0.0, 1);
  const Vector e = estimate_propensity(s.data);
  CHECK((e.array() - 0.5).abs().maxCoeff() < 0.05);
}

TEST_CASE("propensity respects the clip") {
  const auto s = sample(2000, 0.1, 3.0, 2);
  NuisanceConfig cfg;
  cfg.clip = 0.05;
  const Vector e = estimate_propensity(s.data, cfg);
  CHECK(e.minCoeff() >= 0.05);
  CHECK(e.maxCoeff() <= 0.95);
  cfg.clip = 0.5;
  CHECK_THROWS(estimate_propensity(s.data, cfg));
}

TEST_CASE("a single treatment arm is rejected") {
  Matrix x = Matrix::Random(10, 2);
  const auto ds = LongTermDataset::from_outcomes(x, IntVector::Ones(10), {OutcomeColumn(10, 1.0), OutcomeColumn(10, 2.0)});
  CHECK_THROWS_WITH_AS(estimate_propensity(ds), doctest::Contains("overlap"), std::invalid_argument);
}

TEST_CASE("no attrition gives unit selection scores") {
  const auto s = sample(500, 0.0, 0.5, 3);
  const SelectionScores r = estimate_selection_scores(s.data);
  for (int t = 1; t <= 3; ++t) {
    for (Index i = 0; i < s.data.size(); ++i) CHECK(r.at(i, t) == 1.0);
  }
}

TEST_CASE("stage models are fit on the units still observed") {
  const auto s = sample(1000, 0.15, 0.5, 4);
  const SelectionScores r = estimate_selection_scores(s.data);
  REQUIRE(r.stages() == 3);
  CHECK(r.fit_rows[0] == 1000);
  CHECK(r.fit_rows[1] == static_cast<Index>(observed_subset(s.data, 1).size()));
  CHECK(r.fit_rows[2] == static_cast<Index>(observed_subset(s.data, 2).size()));

  for (int t = 1; t <= 3; ++t) {
    for (Index i = 0; i < s.data.size(); ++i) {
      const auto ui = static_cast<std::size_t>(i);
      const bool defined = t == 1 || s.data.is_observed(i, t - 1);
      CHECK(r.product[static_cast<std::size_t>(t - 1)][ui].has_value() == defined);
      if (!defined) {
        CHECK_THROWS_AS(r.at(i, t), std::out_of_range);
        continue;
      }
      const double f = *r.factor[static_cast<std::size_t>(t - 1)][ui];
      CHECK(f >= 0.01);
      CHECK(f <= 0.99);
      const double prev = t == 1 ? 1.0 : r.at(i, t - 1);
      CHECK(r.at(i, t) == doctest::Approx(prev * f));
      CHECK(r.at(i, t) <= prev);
    }
  }
}

TEST_CASE("selection features stack X, A and earlier stages") {
  const auto s = sample(50, 0.0, 0.5, 5);
  const Matrix f = selection_features(s.data, 3, {0, 7});
  CHECK(f.cols() == 5 + 1 + 2);
  CHECK(f(1, 5) == s.data.treatment()(7));
  CHECK(f(1, 6) == s.data.value(7, 1));
  CHECK(f(1, 7) == s.data.value(7, 2));
  CHECK(selection_features(s.data, 1, {0}).cols() == 6);
}

TEST_CASE("known scores are wrapped as given") {
  Vector e(2);
  e << 0.3, 0.6;
  const NuisanceScores n = known_nuisances(e, {{0.9, 0.8}, {0.5, std::nullopt}});
  CHECK(n.propensity_of(0, 1) == 0.3);
  CHECK(n.propensity_of(1, 0) == doctest::Approx(0.4));
  CHECK(n.selection.at(0, 2) == 0.5);
  CHECK_THROWS(n.selection.at(1, 2));
}

}  // TEST_SUITE
