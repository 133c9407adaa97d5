#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "ltce/dgp.hpp"

using namespace ltce;

namespace {

double mean(const Vector& v) { return v.mean(); }
double variance(const Vector& v) {
  return (v.array() - v.mean()).square().sum() / static_cast<double>(v.size() - 1);
}

DgpConfig small(OutcomeStyle style, Index n, std::uint64_t seed) {
  DgpConfig c = DgpConfig::defaults(style);
  c.n = n;
  c.p = 6;
  c.tau_x_draws = 20;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_SUITE("dgp") {

TEST_CASE("covariates: deterministic, normal block then Bernoulli block") {
  CHECK(gen_covariates(3, 2, 7) == gen_covariates(3, 2, 7));
  CHECK(gen_covariates(3, 2, 7) != gen_covariates(3, 2, 8));
  const Matrix x = gen_covariates(100000, 5, 3);
  for (Index j = 0; j < 3; ++j) CHECK(std::abs(variance(x.col(j)) - 1.0) < 0.05);
  for (Index j = 3; j < 5; ++j) {
    CHECK(std::abs(mean(x.col(j)) - 0.5) < 0.01);
    CHECK((x.col(j).array() * (1.0 - x.col(j).array())).abs().maxCoeff() == 0.0);
  }
}

TEST_CASE("treatment assignment is logistic in theta'x") {
  const Matrix x = gen_covariates(100000, 4, 1);
  const IntVector a = gen_treatment(x, Vector::Zero(4), 2);
  CHECK(std::abs(a.cast<double>().mean() - 0.5) < 0.01);
  CHECK(gen_treatment(x, Vector::Zero(4), 2) == a);

  Matrix z(3, 1);
  z << 1.0, 10.0, 100.0;
  const Vector p = treatment_probability(z, Vector::Ones(1));
  CHECK(p(0) < p(1));
  CHECK(p(1) <= p(2));
  CHECK(p(2) == doctest::Approx(1.0));
}

TEST_CASE("coefficient draws respect their supports") {
  const DgpDraw d = DgpDraw::sample(500, 0.5, 9);
  CHECK(d.w0.cwiseAbs().maxCoeff() <= 1.0);
  CHECK(d.w1.cwiseAbs().maxCoeff() <= 1.0);
  for (Index j = 0; j < d.beta0.size(); ++j) {
    const double b = d.beta0(j);
    CHECK((b == 0 || b == 1 || b == 2 || b == 3 || b == 4));
  }
  CHECK(d.beta1.minCoeff() >= 0.0);
  CHECK(d.beta1.maxCoeff() <= 16.0);
  CHECK(std::abs(d.beta0.mean() - 1.0) < 0.2);  // E = .2 + .3 + .3 + .2
}

TEST_CASE("continuous outcomes: C1 = 0 decouples Y from the history; innovation sd 0.5") {
  DgpConfig cfg = small(OutcomeStyle::Continuous, 100000, 21);
  cfg.c1 = 0.0;
  cfg.tau_x_draws = 1;
  const Matrix x = gen_covariates(cfg.n, cfg.p, 1);
  const DgpDraw draw = DgpDraw::sample(cfg.p, 0.5, 2);
  const IntVector a = gen_treatment(x, draw.theta, 3);
  const OutcomeDraw out = gen_outcomes_continuous(x, a, draw, cfg);
  const Vector innovation = out.truth.long_term.col(1) - (x * draw.beta1).array().matrix() - Vector::Constant(cfg.n, 2.0);
  CHECK(std::abs(variance(innovation) - 0.25) < 0.01);
  CHECK(std::abs(innovation.mean()) < 0.01);
  const Vector s1 = out.truth.short_term[0].col(1);
  const double cov = ((innovation.array() - innovation.mean()) * (s1.array() - s1.mean())).mean();
  CHECK(std::abs(cov) < 0.005);

  SUBCASE("consistency with the treatment slice and determinism") {
    const OutcomeDraw again = gen_outcomes_continuous(x, a, draw, cfg);
    CHECK(again.truth.long_term == out.truth.long_term);
    for (Index i = 0; i < 50; ++i) {
      CHECK(*out.observed[2][static_cast<std::size_t>(i)] == out.truth.long_term(i, a(i)));
      CHECK(*out.observed[0][static_cast<std::size_t>(i)] == out.truth.short_term[0](i, a(i)));
    }
  }
}

TEST_CASE("binarymix: symmetric arms give a null effect") {
  DgpConfig cfg = small(OutcomeStyle::BinaryMix, 100000, 4);
  cfg.c2 = 0.0;
  cfg.mu1 = cfg.mu0;
  cfg.sigma1 = cfg.sigma0;
  cfg.tau_x_draws = 1;
  const Matrix x = gen_covariates(cfg.n, cfg.p, 5);
  DgpDraw draw = DgpDraw::sample(cfg.p, 0.5, 6);
  draw.beta1 = draw.beta0;
  draw.w1 = draw.w0;
  const IntVector a = gen_treatment(x, draw.theta, 7);
  const OutcomeDraw out = gen_outcomes_binarymix(x, a, draw, cfg);
  CHECK(std::abs(out.truth.tau) < 0.02);
}

TEST_CASE("binarymix: clamped Bernoulli parameter never fails over 1e6 draws") {
  DgpConfig cfg = small(OutcomeStyle::BinaryMix, 250000, 8);
  cfg.c2 = 2.0;
  cfg.stages = 5;
  cfg.tau_x_draws = 1;
  const Matrix x = gen_covariates(cfg.n, cfg.p, 9);
  const DgpDraw draw = DgpDraw::sample(cfg.p, 0.5, 10);
  const IntVector a = gen_treatment(x, draw.theta, 11);
  const OutcomeDraw out = gen_outcomes_binarymix(x, a, draw, cfg);
  for (const auto& s : out.truth.short_term) CHECK(s.allFinite());
  CHECK(out.truth.long_term.allFinite());
  CHECK(out.truth.tau_x.allFinite());
}

TEST_CASE("missing increments use floor rounding") {
  CHECK(missing_increment(100, 0.1, 1) == 10);
  CHECK(missing_increment(100, 0.1, 2) == 9);
  CHECK(missing_increment(100, 0.1, 3) == 8);
  CHECK(missing_increment(100, 0.0, 2) == 0);
}

TEST_CASE("ranked mechanism: counts, monotonicity and the score rule") {
  DgpConfig cfg = small(OutcomeStyle::Continuous, 100, 12);
  cfg.gamma = 0.1;
  cfg.stages = 3;
  const SyntheticSample s = simulate(cfg);
  CHECK_FALSE(validate_monotone(s.data.observed()).has_value());
  CHECK(observed_subset(s.data, 1).size() == 90);
  CHECK(observed_subset(s.data, 2).size() == 81);
  CHECK(observed_subset(s.data, 3).size() == 73);

  // Units dropped at stage t score no higher than every unit kept.
  for (int t = 2; t <= 3; ++t) {
    double dropped_max = -INFINITY, kept_min = INFINITY;
    for (Index i = 0; i < s.data.size(); ++i) {
      if (!s.data.is_observed(i, t - 1)) continue;
      double score = s.data.covariates().row(i).sum();
      for (int j = 1; j < t; ++j) score += s.data.value(i, j);
      if (s.data.is_observed(i, t)) kept_min = std::min(kept_min, score);
      else dropped_max = std::max(dropped_max, score);
    }
    CHECK(dropped_max <= kept_min);
  }

  cfg.gamma = 0.0;
  const SyntheticSample none = simulate(cfg);
  CHECK(none.data.observed().cast<int>().minCoeff() == 1);

  cfg.gamma = 1.0;
  CHECK_THROWS(simulate(cfg));
}

TEST_CASE("logistic mechanism exposes consistent selection probabilities") {
  DgpConfig cfg = small(OutcomeStyle::Continuous, 20000, 13);
  cfg.gamma = 0.2;
  cfg.missing = MissingMechanism::Logistic;
  const SyntheticSample s = simulate(cfg);
  REQUIRE(s.selection.has_value());
  CHECK_FALSE(validate_monotone(s.data.observed()).has_value());
  for (int t = 1; t <= cfg.stages; ++t) {
    double expected = 0.0;
    for (Index i = 0; i < s.data.size(); ++i) {
      const auto& r = (*s.selection)[static_cast<std::size_t>(t - 1)][static_cast<std::size_t>(i)];
      if (t == 1 || s.data.is_observed(i, t - 1)) {
        REQUIRE(r.has_value());
        CHECK(*r > 0.0);
        const double prev = t == 1 ? 1.0 : *(*s.selection)[static_cast<std::size_t>(t - 2)][static_cast<std::size_t>(i)];
        CHECK(*r <= prev);
        // Stagewise keep probability r_t / r_{t-1} for units still observed.
        expected += *r / prev;
      }
    }
    const double observed = static_cast<double>(observed_subset(s.data, t).size());
    CHECK(std::abs(observed - expected) < 4.0 * std::sqrt(expected));
  }
}

TEST_CASE("true effects") {
  GroundTruth gt;
  gt.long_term = Matrix(2, 2);
  gt.long_term << 0, 1, 2, 4;
  gt.tau_x = Vector::Zero(2);
  CHECK(true_effects(gt).tau == doctest::Approx(1.5));

  gt.long_term << 1, 1, 2, 2;
  CHECK(true_effects(gt).tau == 0.0);

  for (auto style : {OutcomeStyle::Continuous, OutcomeStyle::BinaryMix}) {
    DgpConfig cfg = small(style, 10000, 14);
    cfg.tau_x_draws = 200;
    const SyntheticSample s = simulate(cfg);
    const Vector diff = s.truth.long_term.col(1) - s.truth.long_term.col(0);
    const Vector resid = diff - s.truth.tau_x;
    const double se = std::sqrt(variance(resid) / static_cast<double>(resid.size()));
    CHECK(std::abs(s.truth.tau - s.truth.tau_x.mean()) <= 3.0 * se + 0.01);
  }
}

TEST_CASE("identical arms give a zero conditional effect") {
  DgpConfig cfg = small(OutcomeStyle::BinaryMix, 200, 15);
  cfg.mu1 = cfg.mu0;
  cfg.sigma1 = cfg.sigma0;
  const Matrix x = gen_covariates(cfg.n, cfg.p, 1);
  DgpDraw draw = DgpDraw::sample(cfg.p, 0.5, 2);
  draw.beta1 = draw.beta0;
  draw.w1 = draw.w0;
  const IntVector a = gen_treatment(x, draw.theta, 3);
  // Without the history term the arms differ only through zero-mean noise.
  cfg.c2 = 0.0;
  const OutcomeDraw out = gen_outcomes_binarymix(x, a, draw, cfg);
  CHECK(out.truth.tau_x.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("simulate is deterministic in the seed") {
  for (auto style : {OutcomeStyle::Continuous, OutcomeStyle::BinaryMix}) {
    const DgpConfig cfg = small(style, 300, 16);
    const SyntheticSample a = simulate(cfg);
    const SyntheticSample b = simulate(cfg);
    CHECK(a.data == b.data);
    CHECK(a.truth.tau_x == b.truth.tau_x);
    CHECK(a.truth.long_term == b.truth.long_term);
  }
}

}  // TEST_SUITE
