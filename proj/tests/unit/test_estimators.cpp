#include <doctest.h>

#include <cmath>

#include "ltce/dgp.hpp"
#include "ltce/estimators.hpp"

using namespace ltce;

namespace {

EstimatorConfig plug_in(RegressorKind kind) {
  EstimatorConfig cfg;
  cfg.outcome.kind = kind;
  cfg.baseline.kind = kind;
  cfg.seed = 1;
  return cfg;
}

// Two stages: S1 affine in X per arm, Y affine in (X, S1) per arm, no noise.
// Units with i % 4 == 0 lose Y, units with i % 7 == 0 lose both stages.
LongTermDataset affine_panel(Index n, std::uint64_t seed, Matrix* potential = nullptr) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix x(n, 3);
  IntVector a(n);
  std::vector<OutcomeColumn> out(2, OutcomeColumn(static_cast<std::size_t>(n)));
  if (potential) *potential = Matrix(n, 2);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < 3; ++j) x(i, j) = normal(rng);
    a(i) = static_cast<int>(i % 2);
    double y[2];
    for (int arm = 0; arm < 2; ++arm) {
      const double s1 = 0.5 + arm + x(i, 0) - 2.0 * x(i, 1) * (1 + arm);
      y[arm] = -1.0 + 3.0 * arm + (1.5 - arm) * s1 + 0.7 * x(i, 2);
    }
    if (potential) (*potential).row(i) << y[0], y[1];
    const int arm = a(i);
    const double s1 = 0.5 + arm + x(i, 0) - 2.0 * x(i, 1) * (1 + arm);
    const auto ui = static_cast<std::size_t>(i);
    if (i % 7 != 0) out[0][ui] = s1;
    if (i % 7 != 0 && i % 4 != 0) out[1][ui] = y[arm];
  }
  return LongTermDataset::from_outcomes(x, a, out);
}

SyntheticSample synthetic(double gamma, double theta_scale, std::uint64_t seed, Index n = 800) {
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

NuisanceScores flat_scores(const LongTermDataset& ds, double e) {
  std::vector<OutcomeColumn> sel;
  for (int t = 1; t <= ds.stages(); ++t) {
    OutcomeColumn c(static_cast<std::size_t>(ds.size()));
    for (Index i = 0; i < ds.size(); ++i) {
      if (t == 1 || ds.is_observed(i, t - 1)) c[static_cast<std::size_t>(i)] = 1.0;
    }
    sel.push_back(std::move(c));
  }
  return known_nuisances(Vector::Constant(ds.size(), e), std::move(sel));
}

}  // namespace

TEST_SUITE("estimators") {

TEST_CASE("naive-or recovers a randomized constant effect") {
  const Index n = 4000;
  Rng rng(3);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix x(n, 2);
  IntVector a(n);
  std::vector<double> s(static_cast<std::size_t>(n)), y(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    x.row(i) << normal(rng), normal(rng);
    a(i) = normal(rng) > 0 ? 1 : 0;
    s[static_cast<std::size_t>(i)] = normal(rng);
    y[static_cast<std::size_t>(i)] = x(i, 0) - 0.5 * x(i, 1) + 2.0 * a(i) + normal(rng);
  }
  const auto ds = LongTermDataset::from_outcomes(x, a, {OutcomeColumn(s.begin(), s.end()), OutcomeColumn(y.begin(), y.end())});
  const EffectEstimate e = naive_or(ds, plug_in(RegressorKind::Linear));
  const double se = std::sqrt(4.0 / static_cast<double>(n));
  CHECK(std::abs(e.tau_hat - 2.0) < 3.0 * se);
  CHECK(e.diagnostics.at("rows_arm1") == static_cast<double>(a.sum()));
  CHECK(e.diagnostics.at("rows_arm0") == static_cast<double>(n - a.sum()));
}

TEST_CASE("naive-or fits on the observed long-term rows of each arm") {
  const auto ds = affine_panel(280, 4);
  const EffectEstimate e = naive_or(ds, plug_in(RegressorKind::Mean));
  double rows[2] = {0, 0};
  for (Index i = 0; i < ds.size(); ++i) {
    if (ds.is_observed(i, 2)) rows[ds.treatment()(i)] += 1;
  }
  CHECK(e.diagnostics.at("rows_arm0") == rows[0]);
  CHECK(e.diagnostics.at("rows_arm1") == rows[1]);
  CHECK(e.cate_hat.size() == ds.size());
  CHECK(e.tau_hat == doctest::Approx(e.cate_hat.mean()));
}

TEST_CASE("naive-ipw with a mean plug-in is the Horvitz-Thompson contrast over complete cases") {
  const auto s = synthetic(0.2, 0.5, 5);
  const NuisanceScores nuis = estimate_nuisances(s.data);
  const EffectEstimate e = naive_ipw(s.data, nuis, plug_in(RegressorKind::Mean));
  const int T = s.data.stages();
  double sum[2] = {0, 0};
  double rows = 0;
  for (Index i = 0; i < s.data.size(); ++i) {
    if (!s.data.is_observed(i, T)) continue;
    rows += 1;
    const int a = s.data.treatment()(i);
    sum[a] += s.data.value(i, T) / nuis.propensity_of(i, a);
  }
  CHECK(e.tau_hat == doctest::Approx((sum[1] - sum[0]) / rows).epsilon(1e-10));
  CHECK(e.diagnostics.at("rows") == rows);
}

TEST_CASE("pseudo-outcomes vanish off the observed arm rows") {
  const auto s = synthetic(0.2, 0.5, 6);
  const NuisanceScores nuis = estimate_nuisances(s.data);
  const int T = s.data.stages();
  for (int a = 0; a < 2; ++a) {
    const Vector phi = ipw_pseudo_outcomes(s.data, nuis, a);
    for (Index i = 0; i < s.data.size(); ++i) {
      if (!s.data.is_observed(i, T) || s.data.treatment()(i) != a) {
        CHECK(phi(i) == 0.0);
      } else {
        CHECK(phi(i) == doctest::Approx(s.data.value(i, T) / (nuis.propensity_of(i, a) * nuis.selection.at(i, T))));
      }
    }
  }
}

TEST_CASE("proposed-ipw with a mean plug-in is the doubly weighted contrast over all units") {
  const auto s = synthetic(0.2, 0.5, 7);
  const NuisanceScores nuis = estimate_nuisances(s.data);
  const EffectEstimate e = proposed_ipw(s.data, nuis, plug_in(RegressorKind::Mean));
  const double expected = (ipw_pseudo_outcomes(s.data, nuis, 1) - ipw_pseudo_outcomes(s.data, nuis, 0)).mean();
  CHECK(e.tau_hat == doctest::Approx(expected).epsilon(1e-10));
  CHECK(e.diagnostics.at("rows") == static_cast<double>(s.data.size()));
}

TEST_CASE("without attrition proposed-ipw reduces to naive-ipw") {
  const auto s = synthetic(0.0, 0.5, 8);
  const NuisanceScores nuis = flat_scores(s.data, 0.5);
  for (auto kind : {RegressorKind::Mean, RegressorKind::Linear}) {
    const EffectEstimate p = proposed_ipw(s.data, nuis, plug_in(kind));
    const EffectEstimate q = naive_ipw(s.data, nuis, plug_in(kind));
    CHECK((p.cate_hat - q.cate_hat).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("seqri is exact on affine stage models under missing-at-random attrition") {
  Matrix potential;
  const auto ds = affine_panel(400, 9, &potential);
  const SeqriResult r = seqri(ds, plug_in(RegressorKind::Linear));
  const Vector truth = potential.col(1) - potential.col(0);
  CHECK((r.estimate.cate_hat - truth).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(r.panel.models[0].size() == 2);
  CHECK(r.panel.chain[1].cols() == 2);
  CHECK(r.estimate.diagnostics.count("rows_stage2_arm1") == 1);
}

TEST_CASE("seqmsm matches seqri with flat weights and linear plug-ins") {
  const auto s = synthetic(0.0, 0.5, 10);
  const EstimatorConfig cfg = plug_in(RegressorKind::Linear);
  const EffectEstimate a = seqmsm(s.data, flat_scores(s.data, 0.5), cfg);
  const EffectEstimate b = seqri(s.data, cfg).estimate;
  CHECK((a.cate_hat - b.cate_hat).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("seqmsm is exact on affine stage models with true selection scores") {
  Matrix potential;
  const auto ds = affine_panel(400, 11, &potential);
  EstimatorConfig cfg = plug_in(RegressorKind::Linear);
  const NuisanceScores nuis = estimate_nuisances(ds);
  const Vector truth = potential.col(1) - potential.col(0);
  CHECK((seqmsm(ds, nuis, cfg).cate_hat - truth).cwiseAbs().maxCoeff() < 1e-6);
  cfg.seqmsm_feed_observed = true;
  CHECK((seqmsm(ds, nuis, cfg).cate_hat - truth).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("feeding observed values changes seqmsm under attrition") {
  const auto s = synthetic(0.2, 0.5, 12, 400);
  const NuisanceScores nuis = estimate_nuisances(s.data);
  EstimatorConfig cfg = plug_in(RegressorKind::Linear);
  const Vector fitted = seqmsm(s.data, nuis, cfg).cate_hat;
  cfg.seqmsm_feed_observed = true;
  CHECK((seqmsm(s.data, nuis, cfg).cate_hat - fitted).cwiseAbs().maxCoeff() > 1e-6);
}

TEST_CASE("dispatch by tag") {
  const auto s = synthetic(0.15, 0.5, 13, 300);
  const EstimatorConfig cfg = plug_in(RegressorKind::Linear);
  CHECK(method_tags().size() == 7);
  CHECK(estimate("seqri", s.data, nullptr, cfg).cate_hat == seqri(s.data, cfg).estimate.cate_hat);
  const NuisanceScores nuis = estimate_nuisances(s.data, cfg.nuisance);
  CHECK(estimate("proposed-ipw", s.data, nullptr, cfg).cate_hat == proposed_ipw(s.data, nuis, cfg).cate_hat);
  CHECK(estimate("naive-ipw", s.data, &nuis, cfg).method == "naive-ipw");
  CHECK_THROWS_WITH_AS(estimate("forest", s.data, nullptr, cfg), doctest::Contains("unknown method"),
                       std::invalid_argument);
}

TEST_CASE("an arm without observed outcomes is an error") {
  Matrix x = Matrix::Random(6, 2);
  IntVector a(6);
  a << 0, 0, 0, 1, 1, 1;
  std::vector<OutcomeColumn> out{{1.0, 2.0, 3.0, 4.0, 5.0, 6.0},
                                 {1.0, 2.0, 3.0, std::nullopt, std::nullopt, std::nullopt}};
  const auto ds = LongTermDataset::from_outcomes(x, a, out);
  const EstimatorConfig cfg = plug_in(RegressorKind::Linear);
  CHECK_THROWS_AS(naive_or(ds, cfg), std::invalid_argument);
  CHECK_THROWS_AS(seqri(ds, cfg), std::invalid_argument);
}

}  // TEST_SUITE
