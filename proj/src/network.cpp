#include "ltce/network.hpp"

#include <cmath>
#include <stdexcept>

namespace ltce {

namespace {

void apply_activation(Activation act, Matrix& z) {
  switch (act) {
    case Activation::Relu:
      z = z.cwiseMax(0.0);
      break;
    case Activation::Elu:
      z = z.unaryExpr([](double v) { return v > 0.0 ? v : std::expm1(v); });
      break;
    case Activation::Identity:
      break;
  }
}

// Multiplies `grad` in place by act'(pre).
void apply_derivative(Activation act, const Matrix& pre, Matrix& grad) {
  switch (act) {
    case Activation::Relu:
      grad = grad.cwiseProduct(pre.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; }));
      break;
    case Activation::Elu:
      grad = grad.cwiseProduct(pre.unaryExpr([](double v) { return v > 0.0 ? 1.0 : std::exp(v); }));
      break;
    case Activation::Identity:
      break;
  }
}

}  // namespace

Mlp::Mlp(std::vector<Index> widths, Activation hidden, bool activate_output)
    : widths_(std::move(widths)), act_(hidden), activate_output_(activate_output) {
  if (widths_.size() < 2) throw std::invalid_argument("network needs at least input and output widths");
  Index total = 0;
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    if (widths_[l] < 1 || widths_[l + 1] < 1) throw std::invalid_argument("layer widths must be >= 1");
    offset_.push_back(total);
    total += (widths_[l] + 1) * widths_[l + 1];
  }
  params_ = Vector::Zero(total);
}

void Mlp::set_parameters(const Vector& p) {
  if (p.size() != params_.size()) throw std::invalid_argument("parameter vector has wrong size");
  params_ = p;
}

void Mlp::initialize(Rng& rng) {
  for (Index l = 0; l < num_layers(); ++l) {
    const Index fan_in = widths_[static_cast<std::size_t>(l)];
    const Index fan_out = widths_[static_cast<std::size_t>(l + 1)];
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-bound, bound);
    const Index off = offset_[static_cast<std::size_t>(l)];
    for (Index k = 0; k < fan_in * fan_out; ++k) params_(off + k) = u(rng);
    params_.segment(off + fan_in * fan_out, fan_out).setZero();
  }
}

Eigen::Map<const Matrix> Mlp::weight(Index l) const {
  const Index fan_in = widths_[static_cast<std::size_t>(l)];
  const Index fan_out = widths_[static_cast<std::size_t>(l + 1)];
  return {params_.data() + offset_[static_cast<std::size_t>(l)], fan_out, fan_in};
}

Eigen::Map<const Vector> Mlp::bias(Index l) const {
  const Index fan_in = widths_[static_cast<std::size_t>(l)];
  const Index fan_out = widths_[static_cast<std::size_t>(l + 1)];
  return {params_.data() + offset_[static_cast<std::size_t>(l)] + fan_in * fan_out, fan_out};
}

Matrix Mlp::forward(const Matrix& input, Cache* cache) const {
  if (input.cols() != input_width()) throw std::invalid_argument("input width mismatch");
  if (cache) {
    cache->inputs.clear();
    cache->pre.clear();
  }
  Matrix h = input;
  for (Index l = 0; l < num_layers(); ++l) {
    Matrix z = h * weight(l).transpose();
    z.rowwise() += bias(l).transpose();
    if (cache) {
      cache->inputs.push_back(std::move(h));
      cache->pre.push_back(z);
    }
    if (l + 1 < num_layers() || activate_output_) apply_activation(act_, z);
    h = std::move(z);
  }
  return h;
}

void Mlp::backward(const Cache& cache, const Matrix& output_grad, Vector& grad,
                   Matrix* input_grad) const {
  if (grad.size() != params_.size()) grad = Vector::Zero(params_.size());
  Matrix delta = output_grad;
  for (Index l = num_layers() - 1; l >= 0; --l) {
    const auto ls = static_cast<std::size_t>(l);
    if (l + 1 < num_layers() || activate_output_) apply_derivative(act_, cache.pre[ls], delta);
    const Index fan_in = widths_[ls];
    const Index fan_out = widths_[ls + 1];
    Eigen::Map<Matrix> gw(grad.data() + offset_[ls], fan_out, fan_in);
    Eigen::Map<Vector> gb(grad.data() + offset_[ls] + fan_in * fan_out, fan_out);
    gw.noalias() += delta.transpose() * cache.inputs[ls];
    gb += delta.colwise().sum().transpose();
    if (l > 0 || input_grad) {
      Matrix next = delta * weight(l);
      if (l == 0) {
        *input_grad = std::move(next);
      } else {
        delta = std::move(next);
      }
    }
  }
}

Adam::Adam(Index size, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(Vector::Zero(size)), v_(Vector::Zero(size)) {}

void Adam::step(Vector& params, const Vector& grad) {
  beta1_t_ *= beta1_;
  beta2_t_ *= beta2_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseAbs2();
  const double c1 = 1.0 - beta1_t_;
  const double c2 = 1.0 - beta2_t_;
  params.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
}

double gradient_check(const Objective& f, const Vector& params, double h) {
  Vector analytic = Vector::Zero(params.size());
  f(params, &analytic);
  Vector probe = params;
  double worst = 0.0;
  for (Index k = 0; k < params.size(); ++k) {
    const double orig = probe(k);
    probe(k) = orig + h;
    const double up = f(probe, nullptr);
    probe(k) = orig - h;
    const double down = f(probe, nullptr);
    probe(k) = orig;
    const double fd = (up - down) / (2.0 * h);
    worst = std::max(worst, std::abs(analytic(k) - fd) / std::max(1.0, std::abs(fd)));
  }
  return worst;
}

}  // namespace ltce
