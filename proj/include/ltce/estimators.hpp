#pragma once

#include <array>
#include <string>
#include <vector>

#include "ltce/balancenet.hpp"
#include "ltce/effect.hpp"
#include "ltce/nuisance.hpp"
#include "ltce/regression.hpp"

namespace ltce {

// Adam with early stopping over a learning-rate grid.
RegressorSpec default_outcome_regressor();
// Plain MLP regression without a validation split: lr 0.001, stops on a
// training-loss plateau.
RegressorSpec default_baseline_regressor();

struct EstimatorConfig {
  // proposed-ipw outer regression, naive-ipw and seqmsm
  RegressorSpec outcome = default_outcome_regressor();
  // naive-or and seqri
  RegressorSpec baseline = default_baseline_regressor();
  NuisanceConfig nuisance;
  BalanceConfig balance;
  // Feed observed S (where available) into later seqmsm stages instead of
  // the fitted chain values.
  bool seqmsm_feed_observed = false;
  bool dump_model = false;
  std::uint64_t seed = 0;
};

const std::vector<std::string>& method_tags();

// Chained per-arm predictions: chain[a](i, t - 1) is the stage-t model of arm
// a evaluated on the imputed values of stages 1..t-1.
struct ImputedPanel {
  std::array<Matrix, 2> chain;
  std::array<std::vector<RegressorPtr>, 2> models;
};

struct SeqriResult {
  EffectEstimate estimate;
  ImputedPanel panel;
};

EffectEstimate naive_or(const LongTermDataset& ds, const EstimatorConfig& cfg);
EffectEstimate naive_ipw(const LongTermDataset& ds, const NuisanceScores& nuis,
                         const EstimatorConfig& cfg);

// phi_a(i) = 1{A_i = a} R_T,i Y_i / (e_a(X_i) r_T,i), zero where R_T = 0.
Vector ipw_pseudo_outcomes(const LongTermDataset& ds, const NuisanceScores& nuis, int arm);
EffectEstimate proposed_ipw(const LongTermDataset& ds, const NuisanceScores& nuis,
                            const EstimatorConfig& cfg);

SeqriResult seqri(const LongTermDataset& ds, const EstimatorConfig& cfg);
EffectEstimate seqmsm(const LongTermDataset& ds, const NuisanceScores& nuis,
                      const EstimatorConfig& cfg);

// Uniform dispatch. `nuis` is fitted on demand when null and the method needs it.
EffectEstimate estimate(const std::string& method, const LongTermDataset& ds,
                        const NuisanceScores* nuis, const EstimatorConfig& cfg);

}  // namespace ltce
