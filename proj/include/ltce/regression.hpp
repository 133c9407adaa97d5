#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ltce/network.hpp"

namespace ltce {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  double learning_rate = 0.005;
  // When non-empty, one model is trained per rate and the lowest validation
  // loss wins.
  std::vector<double> learning_rate_grid;
  int max_epochs = 1000;
  int patience = 10;
  double validation_fraction = 0.2;
  // Without early stopping, training stops once the training loss fails to
  // improve by `tolerance` for `patience` consecutive epochs.
  bool early_stopping = true;
  double tolerance = 1e-4;
  std::vector<Index> hidden = {50, 25};
  Activation activation = Activation::Relu;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

// Per-epoch losses on the standardized scale.
struct TrainingTrace {
  std::vector<double> train_loss;
  std::vector<double> validation_loss;
  int best_epoch = -1;
  double learning_rate = 0.0;
};

class FittedRegressor {
 public:
  virtual ~FittedRegressor() = default;
  virtual Vector predict(const Matrix& features) const = 0;
  virtual std::string kind() const = 0;
};

using RegressorPtr = std::shared_ptr<const FittedRegressor>;

// Column-wise affine standardization; zero-variance columns keep unit scale.
struct Standardizer {
  Vector mean;
  Vector scale;

  static Standardizer fit(const Matrix& x, const Vector& w);
  Matrix apply(const Matrix& x) const;
};

class FeedForwardRegressor final : public FittedRegressor {
 public:
  FeedForwardRegressor(Mlp net, Standardizer inputs, double target_mean, double target_scale,
                       TrainingTrace trace)
      : net_(std::move(net)), inputs_(std::move(inputs)), target_mean_(target_mean),
        target_scale_(target_scale), trace_(std::move(trace)) {}

  Vector predict(const Matrix& features) const override;
  std::string kind() const override { return "network"; }
  const Mlp& network() const { return net_; }
  const TrainingTrace& trace() const { return trace_; }

 private:
  Mlp net_;
  Standardizer inputs_;
  double target_mean_;
  double target_scale_;
  TrainingTrace trace_;
};

// Closed-form weighted least squares with intercept (minimum-norm solution
// when the design is rank deficient).
class LinearRegressor final : public FittedRegressor {
 public:
  LinearRegressor(double intercept, Vector coef) : intercept_(intercept), coef_(std::move(coef)) {}
  Vector predict(const Matrix& features) const override;
  std::string kind() const override { return "linear"; }
  double intercept() const { return intercept_; }
  const Vector& coefficients() const { return coef_; }

 private:
  double intercept_;
  Vector coef_;
};

// Weighted mean of the targets, ignoring features.
class MeanRegressor final : public FittedRegressor {
 public:
  explicit MeanRegressor(double mean) : mean_(mean) {}
  Vector predict(const Matrix& features) const override {
    return Vector::Constant(features.rows(), mean_);
  }
  std::string kind() const override { return "mean"; }

 private:
  double mean_;
};

enum class RegressorKind { Network, Linear, Mean };

std::string to_string(RegressorKind k);
RegressorKind parse_regressor_kind(const std::string& s);

struct RegressorSpec {
  RegressorKind kind = RegressorKind::Network;
  TrainConfig train;
};

// sum_i w_i (y_i - f(z_i))^2 / sum_i w_i; fills the parameter gradient when
// `grad` is non-null.
double weighted_squared_loss(const Mlp& net, const Matrix& x, const Vector& y, const Vector& w,
                             Vector* grad);

// Trains the network regressor. Rows with zero weight are dropped before
// standardization and the validation split.
std::shared_ptr<const FeedForwardRegressor> train_feedforward(const Matrix& x, const Vector& y,
                                                              const Vector& w,
                                                              const TrainConfig& cfg,
                                                              std::uint64_t seed);

std::shared_ptr<const LinearRegressor> fit_linear(const Matrix& x, const Vector& y, const Vector& w);

RegressorPtr fit_regressor(const RegressorSpec& spec, const Matrix& x, const Vector& y,
                           const Vector& w, std::uint64_t seed);

// Shared full-batch Adam loop with early stopping. `train` and `validate`
// evaluate the objective on their row sets; `validate` may be empty, in which
// case the training-loss plateau rule applies.
struct LoopResult {
  Vector best_params;
  TrainingTrace trace;
};
LoopResult run_adam(const Objective& train, const std::function<double(const Vector&)>& validate,
                    const Vector& init, const TrainConfig& cfg, double learning_rate);

// Indices [0, m) shuffled by `seed`; the last floor(fraction * m) go to
// validation (at least one when m >= 5 and fraction > 0).
struct Split {
  std::vector<Index> train;
  std::vector<Index> validation;
};
Split validation_split(Index m, double fraction, std::uint64_t seed);

}  // namespace ltce
