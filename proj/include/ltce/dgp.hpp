#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "ltce/dataset.hpp"

namespace ltce {

enum class OutcomeStyle {
  Continuous,  // IHDP-style: Bernoulli first stage, Gaussian later stages
  BinaryMix,   // JOBS-style: Bernoulli plus Gaussian noise at every later stage
};

enum class MissingMechanism {
  // Stage 1 completely at random; later stages drop the lowest-score units.
  Ranked,
  // Same scores, but each unit drops with a known probability, so the true
  // selection scores are available as an oracle.
  Logistic,
};

std::string to_string(OutcomeStyle s);
std::string to_string(MissingMechanism m);
OutcomeStyle parse_outcome_style(const std::string& s);
MissingMechanism parse_missing_mechanism(const std::string& s);

struct DgpConfig {
  OutcomeStyle style = OutcomeStyle::Continuous;
  Index n = 747;
  Index p = 25;
  int stages = 3;  // T
  double c1 = 5.0;
  double c2 = 2.0;
  double mu0 = 1.0;
  double mu1 = 3.0;
  double sigma0 = 1.0;
  double sigma1 = 1.0;
  double gamma = 0.15;
  double treatment_coef_scale = 0.5;
  MissingMechanism missing = MissingMechanism::Ranked;
  double selection_slope = 1.0;  // Logistic mechanism only
  int tau_x_draws = 2000;
  std::uint64_t seed = 0;

  // Stage-1 noise constants for the style: (1, 3, 1, 1) or (0, 2, 1, 1).
  static DgpConfig defaults(OutcomeStyle style);
  void validate() const;
};

// Per-replication coefficient draws.
struct DgpDraw {
  Vector w0;     // truncated N(0,1) on [-1, 1]
  Vector w1;     // Unif(-1, 1)
  Vector beta0;  // {0,1,2,3,4} w.p. {.5,.2,.15,.1,.05}
  Vector beta1;  // 4 * truncated N(0,1) on [0, 4]
  Vector theta;  // N(0, scale^2 / p)

  static DgpDraw sample(Index p, double treatment_coef_scale, std::uint64_t seed);
};

// First ceil(p/2) columns N(0,1), the rest Bernoulli(1/2).
Matrix gen_covariates(Index n, Index p, std::uint64_t seed);

Vector treatment_probability(const Matrix& x, const Vector& theta);
IntVector gen_treatment(const Matrix& x, const Vector& theta, std::uint64_t seed);

// Fully observed outcomes plus potential-outcome ground truth.
struct OutcomeDraw {
  std::vector<OutcomeColumn> observed;  // T stages, all present
  GroundTruth truth;
};

OutcomeDraw gen_outcomes_continuous(const Matrix& x, const IntVector& a, const DgpDraw& draw,
                                    const DgpConfig& cfg);
OutcomeDraw gen_outcomes_binarymix(const Matrix& x, const IntVector& a, const DgpDraw& draw,
                                   const DgpConfig& cfg);
OutcomeDraw gen_outcomes(const Matrix& x, const IntVector& a, const DgpDraw& draw,
                         const DgpConfig& cfg);

// Number of units dropped at stage t (1-based): floor(gamma (1-gamma)^(t-1) n).
Index missing_increment(Index n, double gamma, int stage);

// Ranked mechanism. `ds` must be fully observed.
LongTermDataset apply_missing(const LongTermDataset& ds, double gamma, std::uint64_t seed);

struct LogisticMissing {
  LongTermDataset data;
  // keep[t-1](i): probability unit i stays observed at stage t given it was
  // observed at t-1; defined for units observed at t-1.
  std::vector<OutcomeColumn> keep;
  // Cumulative product r_t = P(R_t = 1 | X, A, S_<t).
  std::vector<OutcomeColumn> selection;
};

LogisticMissing apply_missing_logistic(const LongTermDataset& ds, double gamma, double slope,
                                       std::uint64_t seed);

struct TrueEffects {
  double tau;
  Vector tau_x;
};
TrueEffects true_effects(const GroundTruth& gt);

struct SyntheticSample {
  LongTermDataset data;
  GroundTruth truth;
  DgpDraw draw;
  Vector propensity;  // true P(A = 1 | X)
  std::optional<std::vector<OutcomeColumn>> selection;  // Logistic mechanism only
};

// Full pipeline: covariates (generated unless supplied), treatment, outcomes,
// missingness. Supplied covariates override cfg.n and cfg.p.
SyntheticSample simulate(const DgpConfig& cfg, const Matrix* covariates = nullptr);

}  // namespace ltce
