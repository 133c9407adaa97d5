#include "ltce/dgp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "ltce/rng.hpp"

namespace ltce {

namespace {

// Later-stage Gaussian noise standard deviations for control / treated arms;
// the second parameter of N(., .) is read as a standard deviation.
constexpr double kLaterSd[2] = {1.0, 0.5};
// Treated-arm intercept shift of the Continuous later stages.
constexpr double kContinuousShift[2] = {0.0, 2.0};

enum Stream : std::uint64_t {
  kCovariates = 1,
  kDraw = 2,
  kTreatment = 3,
  kOutcomes = 4,
  kConditionalMean = 5,
  kMissing = 6,
};

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

bool bernoulli(Rng& rng, double p) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
}

void check_outcome_inputs(const Matrix& x, const IntVector& a, const DgpDraw& draw,
                          const DgpConfig& cfg) {
  if (cfg.stages < 2) throw std::invalid_argument("stages must be >= 2");
  if (a.size() != x.rows()) throw std::invalid_argument("treatment length mismatch");
  if (draw.w0.size() != x.cols() || draw.beta0.size() != x.cols()) {
    throw std::invalid_argument("coefficient draw dimension does not match covariates");
  }
}

// Both arms' stage-1 parameters.
struct FirstStage {
  double mu[2];
  double sigma[2];
};

FirstStage first_stage(const DgpConfig& cfg) {
  return {{cfg.mu0, cfg.mu1}, {cfg.sigma0, cfg.sigma1}};
}

OutcomeDraw assemble(const Matrix& x, const IntVector& a, std::vector<Matrix> short_term,
                     Matrix long_term, Vector tau_x) {
  const Index n = x.rows();
  const int t0 = static_cast<int>(short_term.size());
  OutcomeDraw out;
  out.observed.assign(static_cast<std::size_t>(t0 + 1), OutcomeColumn(static_cast<std::size_t>(n)));
  for (Index i = 0; i < n; ++i) {
    for (int t = 0; t < t0; ++t) {
      out.observed[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)] =
          short_term[static_cast<std::size_t>(t)](i, a(i));
    }
    out.observed[static_cast<std::size_t>(t0)][static_cast<std::size_t>(i)] = long_term(i, a(i));
  }
  out.truth.tau = (long_term.col(1) - long_term.col(0)).mean();
  out.truth.short_term = std::move(short_term);
  out.truth.long_term = std::move(long_term);
  out.truth.tau_x = std::move(tau_x);
  return out;
}

}  // namespace

std::string to_string(OutcomeStyle s) {
  return s == OutcomeStyle::Continuous ? "continuous" : "binarymix";
}

std::string to_string(MissingMechanism m) {
  return m == MissingMechanism::Ranked ? "ranked" : "logistic";
}

OutcomeStyle parse_outcome_style(const std::string& s) {
  if (s == "continuous" || s == "ihdp") return OutcomeStyle::Continuous;
  if (s == "binarymix" || s == "jobs") return OutcomeStyle::BinaryMix;
  throw std::invalid_argument("unknown outcome style '" + s + "'");
}

MissingMechanism parse_missing_mechanism(const std::string& s) {
  if (s == "ranked") return MissingMechanism::Ranked;
  if (s == "logistic") return MissingMechanism::Logistic;
  throw std::invalid_argument("unknown missing mechanism '" + s + "'");
}

DgpConfig DgpConfig::defaults(OutcomeStyle style) {
  DgpConfig c;
  c.style = style;
  if (style == OutcomeStyle::BinaryMix) {
    c.n = 2570;
    c.p = 17;
    c.mu0 = 0.0;
    c.mu1 = 2.0;
  }
  return c;
}

void DgpConfig::validate() const {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  if (p < 1) throw std::invalid_argument("p must be >= 1");
  if (stages < 2) throw std::invalid_argument("stages (T) must be >= 2");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in [0, 1)");
  if (!(sigma0 > 0.0 && sigma1 > 0.0)) throw std::invalid_argument("sigma0 and sigma1 must be > 0");
  if (tau_x_draws < 1) throw std::invalid_argument("tau_x_draws must be >= 1");
}

DgpDraw DgpDraw::sample(Index p, double treatment_coef_scale, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::discrete_distribution<int> beta0_dist({0.5, 0.2, 0.15, 0.1, 0.05});
  std::normal_distribution<double> normal(0.0, treatment_coef_scale / std::sqrt(static_cast<double>(p)));
  DgpDraw d;
  d.w0.resize(p);
  d.w1.resize(p);
  d.beta0.resize(p);
  d.beta1.resize(p);
  d.theta.resize(p);
  for (Index j = 0; j < p; ++j) d.w0(j) = truncated_normal(rng, -1.0, 1.0);
  for (Index j = 0; j < p; ++j) d.w1(j) = unif(rng);
  for (Index j = 0; j < p; ++j) d.beta0(j) = beta0_dist(rng);
  for (Index j = 0; j < p; ++j) d.beta1(j) = 4.0 * truncated_normal(rng, 0.0, 4.0);
  for (Index j = 0; j < p; ++j) d.theta(j) = normal(rng);
  return d;
}

Matrix gen_covariates(Index n, Index p, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Index continuous = (p + 1) / 2;
  Matrix x(n, p);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) x(i, j) = j < continuous ? normal(rng) : (bernoulli(rng, 0.5) ? 1.0 : 0.0);
  }
  return x;
}

Vector treatment_probability(const Matrix& x, const Vector& theta) {
  return (x * theta).unaryExpr([](double z) { return sigmoid(z); });
}

IntVector gen_treatment(const Matrix& x, const Vector& theta, std::uint64_t seed) {
  const Vector prob = treatment_probability(x, theta);
  Rng rng(seed);
  IntVector a(x.rows());
  for (Index i = 0; i < x.rows(); ++i) a(i) = bernoulli(rng, prob(i)) ? 1 : 0;
  return a;
}

OutcomeDraw gen_outcomes_continuous(const Matrix& x, const IntVector& a, const DgpDraw& draw,
                                    const DgpConfig& cfg) {
  check_outcome_inputs(x, a, draw, cfg);
  const Index n = x.rows();
  const int t0 = cfg.stages - 1;
  const FirstStage fs = first_stage(cfg);
  const Vector w[2] = {x * draw.w0, x * draw.w1};
  const Vector lin[2] = {x * draw.beta0, x * draw.beta1};

  Rng rng(derive_seed(cfg.seed, {kOutcomes}));
  std::normal_distribution<double> std_normal(0.0, 1.0);
  std::vector<Matrix> s(static_cast<std::size_t>(t0), Matrix(n, 2));
  Matrix y(n, 2);
  for (Index i = 0; i < n; ++i) {
    for (int arm = 0; arm < 2; ++arm) {
      const double eps = fs.mu[arm] + fs.sigma[arm] * std_normal(rng);
      double history = bernoulli(rng, sigmoid(w[arm](i) + eps)) ? 1.0 : 0.0;
      s[0](i, arm) = history;
      for (int t = 1; t < t0; ++t) {
        const double v = lin[arm](i) + kContinuousShift[arm] + kLaterSd[arm] * std_normal(rng) +
                         cfg.c1 * history;
        s[static_cast<std::size_t>(t)](i, arm) = v;
        history += v;
      }
      y(i, arm) = lin[arm](i) + kContinuousShift[arm] + kLaterSd[arm] * std_normal(rng) +
                  cfg.c1 * history;
    }
  }

  // Conditional means are affine in E[S_1(a) | X], so only the stage-1
  // logistic-normal mean needs Monte Carlo.
  Rng mc(derive_seed(cfg.seed, {kConditionalMean}));
  Vector tau_x(n);
  for (Index i = 0; i < n; ++i) {
    double mean_y[2];
    for (int arm = 0; arm < 2; ++arm) {
      double m1 = 0.0;
      for (int r = 0; r < cfg.tau_x_draws; ++r) {
        m1 += sigmoid(w[arm](i) + fs.mu[arm] + fs.sigma[arm] * std_normal(mc));
      }
      m1 /= cfg.tau_x_draws;
      double history = m1;
      for (int t = 1; t < t0; ++t) {
        const double m = lin[arm](i) + kContinuousShift[arm] + cfg.c1 * history;
        history += m;
      }
      mean_y[arm] = lin[arm](i) + kContinuousShift[arm] + cfg.c1 * history;
    }
    tau_x(i) = mean_y[1] - mean_y[0];
  }
  return assemble(x, a, std::move(s), std::move(y), std::move(tau_x));
}

OutcomeDraw gen_outcomes_binarymix(const Matrix& x, const IntVector& a, const DgpDraw& draw,
                                   const DgpConfig& cfg) {
  check_outcome_inputs(x, a, draw, cfg);
  const Index n = x.rows();
  const int t0 = cfg.stages - 1;
  const FirstStage fs = first_stage(cfg);
  const Vector w[2] = {x * draw.w0, x * draw.w1};
  const Vector base[2] = {treatment_probability(x, draw.beta0), treatment_probability(x, draw.beta1)};
  std::normal_distribution<double> std_normal(0.0, 1.0);

  // One pass of the stage chain for unit i; returns E[Y(a) | S history] and
  // optionally writes the realized outcomes.
  auto chain = [&](Rng& rng, Index i, int arm, double* realized_s, double* realized_y) {
    const double eps = fs.mu[arm] + fs.sigma[arm] * std_normal(rng);
    double sum = bernoulli(rng, sigmoid(w[arm](i) + eps)) ? 1.0 : 0.0;
    if (realized_s) realized_s[0] = sum;
    for (int t = 2; t <= t0; ++t) {
      const double q = std::clamp(base[arm](i) + cfg.c2 / (t - 1) * sum, 0.0, 1.0);
      const double v = (bernoulli(rng, q) ? 1.0 : 0.0) + kLaterSd[arm] * std_normal(rng);
      if (realized_s) realized_s[t - 1] = v;
      sum += v;
    }
    const double mean_y = base[arm](i) + cfg.c2 / t0 * sum;
    if (realized_y) {
      *realized_y = (bernoulli(rng, base[arm](i)) ? 1.0 : 0.0) + cfg.c2 / t0 * sum +
                    kLaterSd[arm] * std_normal(rng);
    }
    return mean_y;
  };

  Rng rng(derive_seed(cfg.seed, {kOutcomes}));
  std::vector<Matrix> s(static_cast<std::size_t>(t0), Matrix(n, 2));
  Matrix y(n, 2);
  std::vector<double> buf(static_cast<std::size_t>(t0));
  for (Index i = 0; i < n; ++i) {
    for (int arm = 0; arm < 2; ++arm) {
      chain(rng, i, arm, buf.data(), &y(i, arm));
      for (int t = 0; t < t0; ++t) s[static_cast<std::size_t>(t)](i, arm) = buf[static_cast<std::size_t>(t)];
    }
  }

  Rng mc(derive_seed(cfg.seed, {kConditionalMean}));
  Vector tau_x(n);
  for (Index i = 0; i < n; ++i) {
    double mean_y[2] = {0.0, 0.0};
    for (int arm = 0; arm < 2; ++arm) {
      for (int r = 0; r < cfg.tau_x_draws; ++r) mean_y[arm] += chain(mc, i, arm, nullptr, nullptr);
      mean_y[arm] /= cfg.tau_x_draws;
    }
    tau_x(i) = mean_y[1] - mean_y[0];
  }
  return assemble(x, a, std::move(s), std::move(y), std::move(tau_x));
}

OutcomeDraw gen_outcomes(const Matrix& x, const IntVector& a, const DgpDraw& draw,
                         const DgpConfig& cfg) {
  return cfg.style == OutcomeStyle::Continuous ? gen_outcomes_continuous(x, a, draw, cfg)
                                               : gen_outcomes_binarymix(x, a, draw, cfg);
}

Index missing_increment(Index n, double gamma, int stage) {
  const double exact = gamma * std::pow(1.0 - gamma, stage - 1) * static_cast<double>(n);
  // The slack absorbs representation error in products such as 0.1 * 0.9 * 100.
  return static_cast<Index>(std::floor(exact + 1e-9));
}

namespace {

void check_missing_inputs(const LongTermDataset& ds, double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in [0, 1)");
  if ((ds.observed().array() == 0).any()) {
    throw std::invalid_argument("missingness can only be applied to a fully observed dataset");
  }
}

// sum_j X_ij plus the outcomes of stages before `stage`.
Vector selection_score(const LongTermDataset& ds, int stage) {
  Vector score = ds.covariates().rowwise().sum();
  for (int t = 1; t < stage; ++t) {
    for (Index i = 0; i < ds.size(); ++i) score(i) += ds.value(i, t);
  }
  return score;
}

std::vector<Index> random_subset(Index n, Index k, Rng& rng) {
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  // Partial Fisher-Yates.
  for (Index j = 0; j < k; ++j) {
    std::uniform_int_distribution<Index> pick(j, n - 1);
    std::swap(idx[static_cast<std::size_t>(j)], idx[static_cast<std::size_t>(pick(rng))]);
  }
  idx.resize(static_cast<std::size_t>(k));
  return idx;
}

}  // namespace

LongTermDataset apply_missing(const LongTermDataset& ds, double gamma, std::uint64_t seed) {
  check_missing_inputs(ds, gamma);
  const Index n = ds.size();
  const int T = ds.stages();
  IndicatorMatrix r = IndicatorMatrix::Ones(n, T);
  Rng rng(seed);

  for (Index i : random_subset(n, missing_increment(n, gamma, 1), rng)) r.row(i).setZero();

  for (int t = 2; t <= T; ++t) {
    const Vector score = selection_score(ds, t);
    std::vector<Index> eligible;
    for (Index i = 0; i < n; ++i) {
      if (r(i, t - 2)) eligible.push_back(i);
    }
    std::stable_sort(eligible.begin(), eligible.end(),
                     [&](Index u, Index v) { return score(u) < score(v); });
    const Index k = std::min<Index>(missing_increment(n, gamma, t), static_cast<Index>(eligible.size()));
    for (Index j = 0; j < k; ++j) {
      r.row(eligible[static_cast<std::size_t>(j)]).tail(T - t + 1).setZero();
    }
  }
  return ds.with_observed(r);
}

LogisticMissing apply_missing_logistic(const LongTermDataset& ds, double gamma, double slope,
                                       std::uint64_t seed) {
  check_missing_inputs(ds, gamma);
  const Index n = ds.size();
  const int T = ds.stages();
  IndicatorMatrix r = IndicatorMatrix::Ones(n, T);
  std::vector<OutcomeColumn> keep(static_cast<std::size_t>(T), OutcomeColumn(static_cast<std::size_t>(n)));
  std::vector<OutcomeColumn> selection = keep;
  Rng rng(seed);

  for (Index i = 0; i < n; ++i) {
    keep[0][static_cast<std::size_t>(i)] = 1.0 - gamma;
    selection[0][static_cast<std::size_t>(i)] = 1.0 - gamma;
    if (!bernoulli(rng, 1.0 - gamma)) r.row(i).setZero();
  }
  for (int t = 2; t <= T; ++t) {
    const Vector score = selection_score(ds, t);
    double mean = 0.0, sq = 0.0;
    Index m = 0;
    for (Index i = 0; i < n; ++i) {
      if (!r(i, t - 2)) continue;
      mean += score(i);
      ++m;
    }
    if (m == 0) break;
    mean /= static_cast<double>(m);
    for (Index i = 0; i < n; ++i) {
      if (r(i, t - 2)) sq += (score(i) - mean) * (score(i) - mean);
    }
    const double sd = m > 1 && sq > 0.0 ? std::sqrt(sq / static_cast<double>(m - 1)) : 1.0;
    for (Index i = 0; i < n; ++i) {
      if (!r(i, t - 2)) continue;
      const double z = (score(i) - mean) / sd;
      const double drop = std::min(0.9, 2.0 * gamma / (1.0 + std::exp(slope * z)));
      const auto u = static_cast<std::size_t>(i);
      keep[static_cast<std::size_t>(t - 1)][u] = 1.0 - drop;
      selection[static_cast<std::size_t>(t - 1)][u] =
          *selection[static_cast<std::size_t>(t - 2)][u] * (1.0 - drop);
      if (!bernoulli(rng, 1.0 - drop)) r.row(i).tail(T - t + 1).setZero();
    }
  }
  return {ds.with_observed(r), std::move(keep), std::move(selection)};
}

TrueEffects true_effects(const GroundTruth& gt) {
  if (gt.long_term.cols() != 2) throw std::invalid_argument("ground truth must hold two arms");
  return {(gt.long_term.col(1) - gt.long_term.col(0)).mean(), gt.tau_x};
}

SyntheticSample simulate(const DgpConfig& cfg_in, const Matrix* covariates) {
  DgpConfig cfg = cfg_in;
  Matrix x;
  if (covariates) {
    x = *covariates;
    cfg.n = x.rows();
    cfg.p = x.cols();
  }
  cfg.validate();
  if (!covariates) x = gen_covariates(cfg.n, cfg.p, derive_seed(cfg.seed, {kCovariates}));

  DgpDraw draw = DgpDraw::sample(cfg.p, cfg.treatment_coef_scale, derive_seed(cfg.seed, {kDraw}));
  Vector propensity = treatment_probability(x, draw.theta);
  IntVector a = gen_treatment(x, draw.theta, derive_seed(cfg.seed, {kTreatment}));
  OutcomeDraw outcomes = gen_outcomes(x, a, draw, cfg);
  auto full = LongTermDataset::from_outcomes(std::move(x), std::move(a), std::move(outcomes.observed));

  const std::uint64_t missing_seed = derive_seed(cfg.seed, {kMissing});
  if (cfg.missing == MissingMechanism::Ranked) {
    return {apply_missing(full, cfg.gamma, missing_seed), std::move(outcomes.truth), std::move(draw),
            std::move(propensity), std::nullopt};
  }
  auto lm = apply_missing_logistic(full, cfg.gamma, cfg.selection_slope, missing_seed);
  return {std::move(lm.data), std::move(outcomes.truth), std::move(draw), std::move(propensity),
          std::move(lm.selection)};
}

}  // namespace ltce
