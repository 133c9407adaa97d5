#include "ltce/estimators.hpp"

#include <algorithm>
#include <stdexcept>

namespace ltce {

RegressorSpec default_outcome_regressor() {
  RegressorSpec s;
  s.kind = RegressorKind::Network;
  s.train.learning_rate_grid = {0.001, 0.005, 0.01};
  return s;
}

RegressorSpec default_baseline_regressor() {
  RegressorSpec s;
  s.kind = RegressorKind::Network;
  s.train.learning_rate = 0.001;
  s.train.early_stopping = false;
  return s;
}

const std::vector<std::string>& method_tags() {
  static const std::vector<std::string> tags{"naive-or", "naive-ipw", "cfr", "proposed-ipw",
                                             "seqri", "seqmsm", "balancenet"};
  return tags;
}

namespace {

std::uint64_t fit_seed(const EstimatorConfig& cfg, const char* method, int stage, int arm) {
  return derive_seed(cfg.seed, {seed_tag(method), static_cast<std::uint64_t>(stage),
                                static_cast<std::uint64_t>(arm)});
}

// X followed by the columns of `prior` for stages 1..stage-1.
Matrix stage_features(const Matrix& x, const Matrix& prior, int stage) {
  Matrix f(x.rows(), x.cols() + stage - 1);
  f.leftCols(x.cols()) = x;
  if (stage > 1) f.rightCols(stage - 1) = prior.leftCols(stage - 1);
  return f;
}

// Observed stage values (zero where missing), n x T.
Matrix observed_values(const LongTermDataset& ds) {
  Matrix v = Matrix::Zero(ds.size(), ds.stages());
  for (int t = 1; t <= ds.stages(); ++t) {
    const auto& col = ds.outcome(t);
    for (Index i = 0; i < ds.size(); ++i) {
      if (col[static_cast<std::size_t>(i)]) v(i, t - 1) = *col[static_cast<std::size_t>(i)];
    }
  }
  return v;
}

std::string key(const char* stem, int stage, int arm) {
  return std::string(stem) + "_stage" + std::to_string(stage) + "_arm" + std::to_string(arm);
}

void finish(EffectEstimate& e) {
  if (!e.cate_hat.allFinite()) throw std::runtime_error(e.method + ": non-finite CATE estimate");
  e.tau_hat = e.cate_hat.mean();
}

void check_nuisances(const LongTermDataset& ds, const NuisanceScores& nuis, bool need_selection) {
  if (nuis.propensity.size() != ds.size()) throw std::invalid_argument("missing nuisances: propensity scores");
  if (need_selection && nuis.selection.stages() != ds.stages()) {
    throw std::invalid_argument("missing nuisances: selection scores");
  }
}

double ipw_weight(const NuisanceScores& nuis, Index i, int arm) {
  return 1.0 / nuis.propensity_of(i, arm);
}

}  // namespace

EffectEstimate naive_or(const LongTermDataset& ds, const EstimatorConfig& cfg) {
  const int T = ds.stages();
  const Vector y = observed_values(ds).col(T - 1);
  EffectEstimate e;
  e.method = "naive-or";
  Vector fitted[2];
  for (int a = 0; a < 2; ++a) {
    Vector w = Vector::Zero(ds.size());
    for (Index i = 0; i < ds.size(); ++i) {
      if (ds.treatment()(i) == a && ds.is_observed(i, T)) w(i) = 1.0;
    }
    if (w.sum() == 0.0) throw std::invalid_argument("naive-or: no observed long-term outcomes in arm " + std::to_string(a));
    e.diagnostics["rows_arm" + std::to_string(a)] = w.sum();
    fitted[a] = fit_regressor(cfg.baseline, ds.covariates(), y, w, fit_seed(cfg, "naive-or", T, a))
                    ->predict(ds.covariates());
  }
  e.cate_hat = fitted[1] - fitted[0];
  finish(e);
  return e;
}

EffectEstimate naive_ipw(const LongTermDataset& ds, const NuisanceScores& nuis, const EstimatorConfig& cfg) {
  check_nuisances(ds, nuis, false);
  const int T = ds.stages();
  const auto rows = observed_subset(ds, T);
  if (rows.empty()) throw std::invalid_argument("naive-ipw: no observed long-term outcomes");
  const Vector y = observed_values(ds).col(T - 1);
  EffectEstimate e;
  e.method = "naive-ipw";
  Vector w = Vector::Zero(ds.size());
  for (Index i : rows) w(i) = 1.0;
  e.diagnostics["rows"] = static_cast<double>(rows.size());
  double max_weight = 0.0;
  Vector fitted[2];
  for (int a = 0; a < 2; ++a) {
    Vector phi = Vector::Zero(ds.size());
    for (Index i : rows) {
      if (ds.treatment()(i) != a) continue;
      const double wt = ipw_weight(nuis, i, a);
      max_weight = std::max(max_weight, wt);
      phi(i) = wt * y(i);
    }
    fitted[a] = fit_regressor(cfg.outcome, ds.covariates(), phi, w, fit_seed(cfg, "naive-ipw", T, a))
                    ->predict(ds.covariates());
  }
  e.diagnostics["max_weight"] = max_weight;
  e.cate_hat = fitted[1] - fitted[0];
  finish(e);
  return e;
}

Vector ipw_pseudo_outcomes(const LongTermDataset& ds, const NuisanceScores& nuis, int arm) {
  check_nuisances(ds, nuis, true);
  const int T = ds.stages();
  Vector phi = Vector::Zero(ds.size());
  for (Index i = 0; i < ds.size(); ++i) {
    if (ds.treatment()(i) != arm || !ds.is_observed(i, T)) continue;
    phi(i) = ds.value(i, T) / (nuis.propensity_of(i, arm) * nuis.selection.at(i, T));
  }
  return phi;
}

EffectEstimate proposed_ipw(const LongTermDataset& ds, const NuisanceScores& nuis, const EstimatorConfig& cfg) {
  check_nuisances(ds, nuis, true);
  const int T = ds.stages();
  EffectEstimate e;
  e.method = "proposed-ipw";
  double max_weight = 0.0;
  for (Index i = 0; i < ds.size(); ++i) {
    if (!ds.is_observed(i, T)) continue;
    const int a = ds.treatment()(i);
    max_weight = std::max(max_weight, 1.0 / (nuis.propensity_of(i, a) * nuis.selection.at(i, T)));
  }
  e.diagnostics["max_weight"] = max_weight;
  e.diagnostics["rows"] = static_cast<double>(ds.size());
  const Vector ones = Vector::Ones(ds.size());
  Vector fitted[2];
  for (int a = 0; a < 2; ++a) {
    const Vector phi = ipw_pseudo_outcomes(ds, nuis, a);
    fitted[a] = fit_regressor(cfg.outcome, ds.covariates(), phi, ones, fit_seed(cfg, "proposed-ipw", T, a))
                    ->predict(ds.covariates());
  }
  e.cate_hat = fitted[1] - fitted[0];
  finish(e);
  return e;
}

SeqriResult seqri(const LongTermDataset& ds, const EstimatorConfig& cfg) {
  const Index n = ds.size();
  const int T = ds.stages();
  const Matrix& x = ds.covariates();
  const Matrix obs = observed_values(ds);
  SeqriResult out;
  out.estimate.method = "seqri";
  for (int a = 0; a < 2; ++a) {
    Matrix& chain = out.panel.chain[a];
    chain = Matrix::Zero(n, T);
    for (int t = 1; t <= T; ++t) {
      Vector w = Vector::Zero(n);
      for (Index i = 0; i < n; ++i) {
        if (ds.treatment()(i) == a && ds.is_observed(i, t)) w(i) = 1.0;
      }
      if (w.sum() == 0.0) {
        throw std::invalid_argument("seqri: no observed rows at stage " + std::to_string(t) + " in arm " +
                                    std::to_string(a));
      }
      out.estimate.diagnostics[key("rows", t, a)] = w.sum();
      // Trained on observed inputs; rows without weight never enter the fit.
      RegressorPtr m = fit_regressor(cfg.baseline, stage_features(x, obs, t), obs.col(t - 1), w,
                                     fit_seed(cfg, "seqri", t, a));
      chain.col(t - 1) = m->predict(stage_features(x, chain, t));
      out.panel.models[a].push_back(std::move(m));
    }
  }
  out.estimate.cate_hat = out.panel.chain[1].col(T - 1) - out.panel.chain[0].col(T - 1);
  finish(out.estimate);
  return out;
}

EffectEstimate seqmsm(const LongTermDataset& ds, const NuisanceScores& nuis, const EstimatorConfig& cfg) {
  check_nuisances(ds, nuis, true);
  const Index n = ds.size();
  const int T = ds.stages();
  const Matrix& x = ds.covariates();
  const Matrix obs = observed_values(ds);
  EffectEstimate e;
  e.method = "seqmsm";
  double max_weight = 0.0;
  Vector final_pred[2];
  for (int a = 0; a < 2; ++a) {
    Matrix chain = Matrix::Zero(n, T);  // f_t(a, ...) along the fitted chain
    Matrix fed = Matrix::Zero(n, T);    // values fed to later stages in training
    for (int t = 1; t <= T; ++t) {
      Vector w = Vector::Zero(n);
      for (Index i = 0; i < n; ++i) {
        if (ds.treatment()(i) != a || !ds.is_observed(i, t)) continue;
        w(i) = ipw_weight(nuis, i, a) / nuis.selection.at(i, t);
        max_weight = std::max(max_weight, w(i));
      }
      if (w.sum() == 0.0) {
        throw std::invalid_argument("seqmsm: no observed rows at stage " + std::to_string(t) + " in arm " +
                                    std::to_string(a));
      }
      e.diagnostics[key("rows", t, a)] = static_cast<double>((w.array() > 0.0).count());
      RegressorPtr f = fit_regressor(cfg.outcome, stage_features(x, fed, t), obs.col(t - 1), w,
                                     fit_seed(cfg, "seqmsm", t, a));
      chain.col(t - 1) = f->predict(stage_features(x, chain, t));
      if (t == T) break;
      fed.col(t - 1) = chain.col(t - 1);
      if (cfg.seqmsm_feed_observed) {
        for (Index i = 0; i < n; ++i) {
          if (ds.is_observed(i, t)) fed(i, t - 1) = obs(i, t - 1);
        }
      }
    }
    final_pred[a] = chain.col(T - 1);
  }
  e.diagnostics["max_weight"] = max_weight;
  e.cate_hat = final_pred[1] - final_pred[0];
  finish(e);
  return e;
}

EffectEstimate estimate(const std::string& method, const LongTermDataset& ds, const NuisanceScores* nuis,
                        const EstimatorConfig& cfg) {
  const bool known = std::find(method_tags().begin(), method_tags().end(), method) != method_tags().end();
  if (!known) throw std::invalid_argument("unknown method tag: " + method);

  NuisanceScores fitted;
  auto need = [&]() -> const NuisanceScores& {
    if (nuis) return *nuis;
    fitted = estimate_nuisances(ds, cfg.nuisance);
    return fitted;
  };

  if (method == "naive-or") return naive_or(ds, cfg);
  if (method == "naive-ipw") return naive_ipw(ds, need(), cfg);
  if (method == "proposed-ipw") return proposed_ipw(ds, need(), cfg);
  if (method == "seqri") return seqri(ds, cfg).estimate;
  if (method == "seqmsm") return seqmsm(ds, need(), cfg);

  const std::uint64_t seed = derive_seed(cfg.seed, {seed_tag(method.c_str())});
  BalanceNetResult r = method == "cfr" ? run_cfr(ds, cfg.balance, seed) : run_balancenet(ds, cfg.balance, seed);
  if (cfg.dump_model) r.estimate.model_json = blocks_to_json(r.blocks);
  return std::move(r.estimate);
}

}  // namespace ltce
