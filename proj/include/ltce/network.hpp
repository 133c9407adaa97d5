#pragma once

#include <functional>
#include <vector>

#include "ltce/dataset.hpp"
#include "ltce/rng.hpp"

namespace ltce {

enum class Activation { Relu, Elu, Identity };

// Fully connected network with every parameter in one flat vector, so
// optimizers and gradient audits can treat it as a point in R^k.
//
// Layer l maps H (batch x fan_in) to act(H W^T + b) with W (fan_out x fan_in)
// stored column-major at offset_[l], followed by b. The last layer is linear
// unless `activate_output` is set.
class Mlp {
 public:
  struct Cache {
    std::vector<Matrix> inputs;  // input to each layer
    std::vector<Matrix> pre;     // pre-activation of each layer
  };

  Mlp() = default;
  Mlp(std::vector<Index> widths, Activation hidden, bool activate_output = false);

  Index input_width() const { return widths_.front(); }
  Index output_width() const { return widths_.back(); }
  const std::vector<Index>& widths() const { return widths_; }
  Activation activation() const { return act_; }
  bool activates_output() const { return activate_output_; }
  Index num_layers() const { return static_cast<Index>(widths_.size()) - 1; }

  // sum over layers of (fan_in + 1) * fan_out
  Index parameter_count() const { return static_cast<Index>(params_.size()); }
  const Vector& parameters() const { return params_; }
  void set_parameters(const Vector& p);

  // Weights ~ U(-sqrt(6 / fan_in), sqrt(6 / fan_in)), biases zero.
  void initialize(Rng& rng);

  Matrix forward(const Matrix& input, Cache* cache = nullptr) const;

  // Accumulates dLoss/dparams into `grad` (same layout as parameters()) and
  // optionally returns dLoss/dinput.
  void backward(const Cache& cache, const Matrix& output_grad, Vector& grad,
                Matrix* input_grad = nullptr) const;

 private:
  Eigen::Map<const Matrix> weight(Index l) const;
  Eigen::Map<const Vector> bias(Index l) const;

  std::vector<Index> widths_;
  std::vector<Index> offset_;
  Activation act_ = Activation::Relu;
  bool activate_output_ = false;
  Vector params_;
};

// Adam state for a flat parameter vector.
class Adam {
 public:
  Adam(Index size, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void step(Vector& params, const Vector& grad);

 private:
  double lr_, beta1_, beta2_, eps_;
  double beta1_t_ = 1.0, beta2_t_ = 1.0;
  Vector m_, v_;
};

// Objective evaluated at a parameter vector; fills `grad` when non-null.
using Objective = std::function<double(const Vector& params, Vector* grad)>;

// Central finite differences with step h against the analytic gradient;
// returns max_k |g_k - fd_k| / max(1, |fd_k|).
double gradient_check(const Objective& f, const Vector& params, double h = 1e-5);

}  // namespace ltce
