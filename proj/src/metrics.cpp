#include "ltce/metrics.hpp"

#include <cmath>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

namespace ltce {

namespace {

void check_lengths(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("length mismatch between estimate and truth");
  if (a.size() == 0) throw std::invalid_argument("empty estimate");
}

}  // namespace

double eps_ate(const Vector& cate_hat, const Vector& true_diff) {
  check_lengths(cate_hat, true_diff);
  return std::abs(cate_hat.mean() - true_diff.mean());
}

double eps_cate(const Vector& cate_hat, const Vector& tau_x) {
  check_lengths(cate_hat, tau_x);
  return std::sqrt((cate_hat - tau_x).squaredNorm() / static_cast<double>(cate_hat.size()));
}

Summary summarize(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("nothing to summarize");
  Summary s;
  s.count = values.size();
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

TTest paired_t_test(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("paired series differ in length");
  if (a.size() < 2) throw std::invalid_argument("paired t-test needs at least two pairs");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  const Summary s = summarize(d);
  TTest out;
  out.df = static_cast<int>(d.size()) - 1;
  if (s.std == 0.0) {
    if (s.mean == 0.0) return out;
    out.t = s.mean > 0 ? INFINITY : -INFINITY;
    out.p = 0.0;
    out.degenerate = true;
    return out;
  }
  out.t = s.mean / (s.std / std::sqrt(static_cast<double>(d.size())));
  boost::math::students_t dist(out.df);
  out.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(out.t)));
  return out;
}

AggregateResult aggregate(const std::vector<TrialResult>& trials, const std::string& reference) {
  if (trials.empty()) throw std::invalid_argument("no trial results to aggregate");
  std::map<std::string, std::map<int, const TrialResult*>> by_method;
  for (const auto& t : trials) by_method[t.method][t.trial] = &t;

  AggregateResult out;
  out.reference = reference;
  for (const auto& [method, rows] : by_method) {
    std::vector<double> ate, cate;
    for (const auto& [trial, r] : rows) {
      ate.push_back(r->eps_ate);
      cate.push_back(r->eps_cate);
    }
    MethodAggregate m;
    m.eps_ate = summarize(ate);
    m.eps_cate = summarize(cate);
    out.methods[method] = m;
  }

  const auto ref = by_method.find(reference);
  if (ref == by_method.end()) return out;
  for (const auto& [method, rows] : by_method) {
    if (method == reference) continue;
    std::vector<double> a_ate, b_ate, a_cate, b_cate;
    for (const auto& [trial, r] : rows) {
      const auto other = ref->second.find(trial);
      if (other == ref->second.end()) continue;
      a_ate.push_back(r->eps_ate);
      b_ate.push_back(other->second->eps_ate);
      a_cate.push_back(r->eps_cate);
      b_cate.push_back(other->second->eps_cate);
    }
    if (a_ate.size() < 2) continue;
    out.methods[method].ate_test = paired_t_test(a_ate, b_ate);
    out.methods[method].cate_test = paired_t_test(a_cate, b_cate);
  }
  return out;
}

}  // namespace ltce
