#include <doctest.h>

#include <cmath>

#include "ltce/metrics.hpp"

using namespace ltce;

TEST_SUITE("metrics") {

TEST_CASE("eps_cate is the root mean squared CATE error") {
  Vector hat(2), truth(2);
  hat << 1, 2;
  truth << -2, 6;
  CHECK(eps_cate(hat, truth) == doctest::Approx(std::sqrt(12.5)));
  CHECK(eps_cate(truth, truth) == 0.0);
}

TEST_CASE("eps_ate compares averages, so offsetting errors cancel") {
  Vector hat(2), truth(2);
  hat << 3, -3;
  truth << 0, 0;
  CHECK(eps_ate(hat, truth) == 0.0);
  CHECK(eps_cate(hat, truth) == doctest::Approx(3.0));
  hat << 2, 2;
  CHECK(eps_ate(hat, truth) == 2.0);
}

TEST_CASE("metric inputs are checked") {
  CHECK_THROWS(eps_ate(Vector::Zero(2), Vector::Zero(3)));
  CHECK_THROWS(eps_cate(Vector(0), Vector(0)));
}

TEST_CASE("summaries use the sample standard deviation") {
  const Summary s = summarize({1.0, 3.0});
  CHECK(s.mean == 2.0);
  CHECK(s.std == doctest::Approx(std::sqrt(2.0)));
  CHECK(s.count == 2);
  CHECK(summarize({4.0}).std == 0.0);
}

TEST_CASE("paired t-test") {
  const TTest same = paired_t_test({1, 2, 3}, {1, 2, 3});
  CHECK(same.p == 1.0);
  CHECK(same.t == 0.0);

  const TTest shift = paired_t_test({2, 3, 4}, {1, 2, 3});
  CHECK(shift.degenerate);
  CHECK(shift.p == 0.0);

  // d = (1, 2, 3, 4): mean 2.5, sd sqrt(5/3), t = 2.5 / (sd / 2), df 3.
  const TTest t = paired_t_test({2, 4, 6, 8}, {1, 2, 3, 4});
  CHECK(t.df == 3);
  CHECK(t.t == doctest::Approx(2.5 / (std::sqrt(5.0 / 3.0) / 2.0)));
  CHECK(t.p == doctest::Approx(0.030466291662170977).epsilon(1e-9));
  CHECK_FALSE(t.degenerate);

  CHECK_THROWS(paired_t_test({1, 2}, {1}));
}

TEST_CASE("aggregate pairs methods with the reference by trial") {
  std::vector<TrialResult> trials;
  for (int k = 0; k < 4; ++k) {
    trials.push_back({"ref", 1.0 + k, 2.0 + k, k, 0});
    trials.push_back({"alt", 0.5 + k + 0.1 * k * k, 1.0 + k, k, 0});
  }
  trials.push_back({"solo", 1.0, 1.0, 0, 0});
  const AggregateResult r = aggregate(trials, "ref");
  CHECK(r.reference == "ref");
  REQUIRE(r.methods.size() == 3);
  CHECK(r.methods.at("ref").eps_cate.mean == doctest::Approx(3.5));
  CHECK_FALSE(r.methods.at("ref").ate_test.has_value());
  REQUIRE(r.methods.at("alt").cate_test.has_value());
  CHECK(r.methods.at("alt").cate_test->degenerate);
  REQUIRE(r.methods.at("alt").ate_test.has_value());
  CHECK(r.methods.at("alt").ate_test->df == 3);
  CHECK_FALSE(r.methods.at("solo").ate_test.has_value());
}

}  // TEST_SUITE
