#pragma once

#include <string>
#include <vector>

#include "ltce/effect.hpp"
#include "ltce/regression.hpp"

namespace ltce {

TrainConfig default_balance_training();

struct BalanceConfig {
  double lambda1 = 1.0;  // observed vs missing representations
  double lambda2 = 1.0;  // treated vs control representations
  Index rep_width = 32;
  int encoder_layers = 2;
  std::vector<Index> head_hidden = {25};
  TrainConfig train = default_balance_training();
  // Feed A into the encoder next to X~.
  bool treatment_input = true;
  // When false the imbalance terms are not computed at all.
  bool penalties = true;
  // One block on the R_T = 1 rows with X as the only input, instead of the
  // sequential chain.
  bool single_block = false;

  void validate() const;
};

// Encoder Phi and the two outcome heads h0, h1 of one stage, plus the
// standardization applied to the block inputs and target.
struct BlockParams {
  Mlp encoder;
  Mlp head0;
  Mlp head1;
  Standardizer inputs;
  double target_mean = 0.0;
  double target_scale = 1.0;
  bool treatment_input = true;
  TrainingTrace trace;

  static BlockParams create(Index feature_width, const BalanceConfig& cfg, Rng& rng);

  Index parameter_count() const;
  Vector parameters() const;  // [encoder, head0, head1]
  void set_parameters(const Vector& p);

  // Representation rows for the standardized inputs under the given arms.
  Matrix represent(const Matrix& features, const IntVector& arms) const;
  // h_arm(Phi(x~, arm)) on the original target scale.
  Vector predict(const Matrix& features, int arm) const;
};

struct StageInput {
  Matrix features;      // X~, fully populated
  IntVector treatment;  // A~
  IntVector observed;   // R~ in {0, 1}
  OutcomeColumn target;  // Y~, present exactly where observed == 1

  Index size() const { return features.rows(); }
  void validate() const;
};

struct MmdValue {
  double value = 0.0;
  bool empty_group = false;
};

// Squared linear MMD: |mean(a) - mean(b)|^2 over representation rows. An
// empty group gives 0 with empty_group set.
MmdValue linear_mmd(const Matrix& a, const Matrix& b);

struct BlockLoss {
  double total = 0.0;
  double factual = 0.0;
  double imbalance_missing = 0.0;
  double imbalance_treatment = 0.0;
  bool empty_group = false;
};

// Factual MSE over observed rows plus lambda1 * MMD(observed, missing) plus
// lambda2 * MMD(treated, control), on the block's standardized scale.
// `grad` (layout of BlockParams::parameters) is filled when non-null.
BlockLoss block_loss(const BlockParams& params, const StageInput& input, double lambda1,
                     double lambda2, Vector* grad = nullptr, bool penalties = true);

BlockParams train_block(const StageInput& input, const BalanceConfig& cfg, std::uint64_t seed);

struct BalanceNetResult {
  EffectEstimate estimate;
  std::vector<BlockParams> blocks;
};

BalanceNetResult run_balancenet(const LongTermDataset& ds, const BalanceConfig& cfg,
                                std::uint64_t seed);

// Treatment-balanced single-block baseline: X -> Y on R_T = 1 rows, encoder
// sees X only, lambda1 = 0.
BalanceNetResult run_cfr(const LongTermDataset& ds, const BalanceConfig& cfg, std::uint64_t seed);

std::string blocks_to_json(const std::vector<BlockParams>& blocks);

}  // namespace ltce
