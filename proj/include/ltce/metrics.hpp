#pragma once

#include <map>
#include <string>
#include <vector>

#include "ltce/dataset.hpp"

namespace ltce {

// |mean(cate_hat) - mean(true_diff)|, true_diff being per-unit Y(1) - Y(0).
double eps_ate(const Vector& cate_hat, const Vector& true_diff);
// sqrt(mean((cate_hat - tau_x)^2)).
double eps_cate(const Vector& cate_hat, const Vector& tau_x);

struct TrialResult {
  std::string method;
  double eps_ate = 0.0;
  double eps_cate = 0.0;
  int trial = 0;
  std::uint64_t seed = 0;
};

struct Summary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 with a single value
  std::size_t count = 0;
};

Summary summarize(const std::vector<double>& values);

struct TTest {
  double t = 0.0;
  double p = 1.0;
  int df = 0;
  bool degenerate = false;  // zero-variance differences with nonzero mean
};

// Two-sided paired t-test on a - b.
TTest paired_t_test(const std::vector<double>& a, const std::vector<double>& b);

struct MethodAggregate {
  Summary eps_ate;
  Summary eps_cate;
  // vs the reference method, paired by trial index; absent for the reference
  // itself or when fewer than two trials pair up.
  std::optional<TTest> ate_test;
  std::optional<TTest> cate_test;
};

struct AggregateResult {
  std::string reference;
  std::map<std::string, MethodAggregate> methods;
};

AggregateResult aggregate(const std::vector<TrialResult>& trials, const std::string& reference = "");

}  // namespace ltce
