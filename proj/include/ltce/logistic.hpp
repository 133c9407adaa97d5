#pragma once

#include <vector>

#include "ltce/dataset.hpp"

namespace ltce {

struct LogisticModel {
  Vector weights;
  double bias = 0.0;
  // Single-class labels: intercept-only model at the clipped probability.
  bool degenerate = false;
  int iterations = 0;
  bool converged = false;
};

struct LogisticOptions {
  double l2 = 1e-6;
  double tolerance = 1e-6;  // on the gradient infinity norm
  int max_iterations = 200;
  double degenerate_clip = 0.01;
};

// Mean (weighted) log-likelihood minus (l2 / 2) |w|^2, the bias unpenalized.
// Parameter layout for `grad`: [weights..., bias].
double logistic_objective(const LogisticModel& model, const Matrix& features, const Vector& labels,
                          const Vector& weights, double l2, Vector* grad = nullptr);

// Maximizes the penalized log-likelihood with Newton ascent steps and step
// halving, so the objective never decreases between iterations. `trace`
// receives the objective after every iteration.
LogisticModel fit_logistic(const Matrix& features, const Vector& labels,
                           const Vector* weights = nullptr, const LogisticOptions& opts = {},
                           std::vector<double>* trace = nullptr);

// sigma(w.z + b) clipped to [clip, 1 - clip]; clip = 0 disables clipping.
Vector predict_proba(const LogisticModel& model, const Matrix& features, double clip = 0.01);

double logit(double p);

}  // namespace ltce
