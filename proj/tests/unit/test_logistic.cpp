#include <doctest.h>

#include <cmath>
#include <random>

#include "ltce/logistic.hpp"
#include "ltce/network.hpp"

using namespace ltce;

TEST_SUITE("logistic") {

TEST_CASE("intercept-only optimum on constant features") {
  Matrix x = Matrix::Zero(1000, 3);
  Vector y = Vector::Zero(1000);
  y.head(600).setOnes();
  const LogisticModel m = fit_logistic(x, y);
  CHECK(m.converged);
  CHECK(std::abs(m.bias - logit(0.6)) < 1e-3);
  CHECK(m.weights.cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("separable 1-D data gives probabilities monotone in x") {
  Matrix x(10, 1);
  Vector y(10);
  for (int i = 0; i < 10; ++i) {
    x(i, 0) = i - 4.5;
    y(i) = i >= 5 ? 1.0 : 0.0;
  }
  const LogisticModel m = fit_logistic(x, y);
  const Vector p = predict_proba(m, x, 0.0);
  for (int i = 1; i < 10; ++i) CHECK(p(i) >= p(i - 1));
  CHECK(m.weights(0) > 0.0);
}

TEST_CASE("recovers known parameters at n = 1e5") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const Index n = 100000;
  Matrix x(n, 3);
  Vector y(n);
  const Vector w = (Vector(3) << 0.8, -1.2, 0.3).finished();
  const double b = -0.4;
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < 3; ++j) x(i, j) = normal(rng);
    const double p = 1.0 / (1.0 + std::exp(-(x.row(i).dot(w) + b)));
    y(i) = unif(rng) < p ? 1.0 : 0.0;
  }
  std::vector<double> trace;
  const LogisticModel m = fit_logistic(x, y, nullptr, {}, &trace);
  CHECK(m.converged);
  CHECK((m.weights - w).cwiseAbs().maxCoeff() < 0.05);
  CHECK(std::abs(m.bias - b) < 0.05);
  for (std::size_t k = 1; k < trace.size(); ++k) CHECK(trace[k] >= trace[k - 1] - 1e-12);
}

TEST_CASE("predict_proba clipping") {
  LogisticModel m;
  m.weights = Vector::Zero(2);
  Matrix x = Matrix::Random(5, 2);
  CHECK((predict_proba(m, x).array() == 0.5).all());

  m.bias = 100.0;
  CHECK(predict_proba(m, x, 0.01)(0) == doctest::Approx(0.99));
  m.bias = 0.7;
  m.weights << 0.3, -2.0;
  const Vector raw = predict_proba(m, x, 0.0);
  for (Index i = 0; i < 5; ++i) {
    CHECK(std::abs(raw(i) - 1.0 / (1.0 + std::exp(-(x.row(i).dot(m.weights) + 0.7)))) < 1e-12);
  }
}

TEST_CASE("single-class labels give a flagged intercept-only model") {
  Matrix x = Matrix::Random(20, 2);
  const LogisticModel m = fit_logistic(x, Vector::Ones(20));
  CHECK(m.degenerate);
  CHECK(predict_proba(m, x, 0.01)(0) == doctest::Approx(0.99));
  const LogisticModel z = fit_logistic(x, Vector::Zero(20));
  CHECK(z.degenerate);
  CHECK(predict_proba(z, x, 0.01)(0) == doctest::Approx(0.01));
}

TEST_CASE("weighted objective gradient passes the finite-difference audit") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix x(8, 3);
  Vector y(8), w(8);
  for (Index i = 0; i < 8; ++i) {
    for (Index j = 0; j < 3; ++j) x(i, j) = normal(rng);
    y(i) = i % 3 == 0 ? 1.0 : 0.0;
    w(i) = 0.5 + std::abs(normal(rng));
  }
  LogisticModel m;
  m.weights = Vector::Zero(3);
  Objective f = [&](const Vector& p, Vector* g) {
    LogisticModel mm;
    mm.weights = p.head(3);
    mm.bias = p(3);
    return logistic_objective(mm, x, y, w, 1e-3, g);
  };
  const Vector p = (Vector(4) << 0.3, -0.5, 1.1, 0.2).finished();
  CHECK(gradient_check(f, p) < 1e-4);
}

TEST_CASE("weights follow frequency semantics") {
  Matrix x(4, 1);
  x << -1, -1, 1, 1;
  Vector y(4);
  y << 0, 1, 1, 0;
  Vector w(4);
  w << 2, 1, 1, 3;
  Matrix xd(7, 1);
  xd << -1, -1, -1, 1, 1, 1, 1;
  Vector yd(7);
  yd << 0, 0, 1, 1, 0, 0, 0;
  const LogisticModel a = fit_logistic(x, y, &w);
  const LogisticModel b = fit_logistic(xd, yd);
  CHECK(a.weights(0) == doctest::Approx(b.weights(0)).epsilon(1e-6));
  CHECK(a.bias == doctest::Approx(b.bias).epsilon(1e-6));
  const Vector pa = predict_proba(a, x, 0.0);
  CHECK(pa(0) == doctest::Approx(1.0 / 3.0).epsilon(1e-4));
  CHECK(pa(2) == doctest::Approx(0.25).epsilon(1e-4));
}

}  // TEST_SUITE
