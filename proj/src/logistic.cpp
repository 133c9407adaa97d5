#include "ltce/logistic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ltce {

namespace {

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

Vector linear_predictor(const LogisticModel& m, const Matrix& x) {
  return (x * m.weights).array() + m.bias;
}

}  // namespace

double logit(double p) { return std::log(p / (1.0 - p)); }

double logistic_objective(const LogisticModel& model, const Matrix& x, const Vector& y,
                          const Vector& w, double l2, Vector* grad) {
  const double total = w.sum();
  const Vector eta = linear_predictor(model, x);
  double ll = 0.0;
  for (Index i = 0; i < x.rows(); ++i) ll += w(i) * (y(i) * eta(i) - softplus(eta(i)));
  ll = ll / total - 0.5 * l2 * model.weights.squaredNorm();
  if (grad) {
    Vector resid(x.rows());
    for (Index i = 0; i < x.rows(); ++i) resid(i) = w(i) * (y(i) - sigmoid(eta(i))) / total;
    grad->resize(x.cols() + 1);
    grad->head(x.cols()) = x.transpose() * resid - l2 * model.weights;
    (*grad)(x.cols()) = resid.sum();
  }
  return ll;
}

LogisticModel fit_logistic(const Matrix& x, const Vector& y, const Vector* weights,
                           const LogisticOptions& opts, std::vector<double>* trace) {
  const Index n = x.rows();
  const Index p = x.cols();
  if (y.size() != n) throw std::invalid_argument("label length mismatch");
  const Vector w = weights ? *weights : Vector::Ones(n);
  if (w.size() != n) throw std::invalid_argument("weight length mismatch");
  if ((w.array() < 0.0).any() || !(w.sum() > 0.0)) {
    throw std::invalid_argument("weights must be nonnegative and not all zero");
  }
  for (Index i = 0; i < n; ++i) {
    if (y(i) != 0.0 && y(i) != 1.0) throw std::invalid_argument("labels must be binary");
  }

  LogisticModel m;
  m.weights = Vector::Zero(p);
  const double total = w.sum();
  const double rate = w.dot(y) / total;
  if (rate <= 0.0 || rate >= 1.0) {
    m.degenerate = true;
    m.converged = true;
    m.bias = logit(rate >= 1.0 ? 1.0 - opts.degenerate_clip : opts.degenerate_clip);
    return m;
  }
  m.bias = logit(rate);

  Vector grad;
  double obj = logistic_objective(m, x, y, w, opts.l2, &grad);
  for (int it = 0; it < opts.max_iterations; ++it) {
    if (grad.lpNorm<Eigen::Infinity>() < opts.tolerance) {
      m.converged = true;
      break;
    }
    // Negative Hessian of the penalized mean log-likelihood.
    const Vector eta = linear_predictor(m, x);
    Matrix design(n, p + 1);
    design.leftCols(p) = x;
    design.col(p).setOnes();
    Vector curv(n);
    for (Index i = 0; i < n; ++i) {
      const double s = sigmoid(eta(i));
      curv(i) = w(i) * s * (1.0 - s) / total;
    }
    Matrix info = design.transpose() * curv.asDiagonal() * design;
    info.diagonal().head(p).array() += opts.l2;
    info.diagonal().array() += 1e-12;
    Vector step = info.ldlt().solve(grad);
    if (!step.allFinite()) step = grad;

    double scale = 1.0;
    bool improved = false;
    for (int k = 0; k < 60; ++k) {
      LogisticModel cand = m;
      cand.weights += scale * step.head(p);
      cand.bias += scale * step(p);
      Vector cand_grad;
      const double cand_obj = logistic_objective(cand, x, y, w, opts.l2, &cand_grad);
      if (std::isfinite(cand_obj) && cand_obj >= obj) {
        m = std::move(cand);
        obj = cand_obj;
        grad = std::move(cand_grad);
        improved = true;
        break;
      }
      scale *= 0.5;
    }
    m.iterations = it + 1;
    if (trace) trace->push_back(obj);
    if (!improved) break;
  }
  if (!m.converged) m.converged = grad.lpNorm<Eigen::Infinity>() < opts.tolerance;
  return m;
}

Vector predict_proba(const LogisticModel& model, const Matrix& x, double clip) {
  Vector eta = linear_predictor(model, x);
  return eta.unaryExpr([clip](double z) { return std::clamp(sigmoid(z), clip, 1.0 - clip); });
}

}  // namespace ltce
