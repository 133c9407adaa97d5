#include "ltce/nuisance.hpp"

#include <stdexcept>

namespace ltce {

void NuisanceConfig::validate() const {
  if (!(clip > 0.0 && clip < 0.5)) throw std::invalid_argument("probability clip must lie in (0, 0.5)");
}

double SelectionScores::at(Index unit, int stage) const {
  const auto& v = product.at(static_cast<std::size_t>(stage - 1)).at(static_cast<std::size_t>(unit));
  if (!v) throw std::out_of_range("selection score undefined for this unit and stage");
  return *v;
}

Matrix selection_features(const LongTermDataset& ds, int stage, const std::vector<Index>& rows) {
  const Index p = ds.num_covariates();
  Matrix f(static_cast<Index>(rows.size()), p + stage);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const Index i = rows[k];
    const Index r = static_cast<Index>(k);
    f.row(r).head(p) = ds.covariates().row(i);
    f(r, p) = ds.treatment()(i);
    for (int t = 1; t < stage; ++t) f(r, p + t) = ds.value(i, t);
  }
  return f;
}

Vector estimate_propensity(const LongTermDataset& ds, const NuisanceConfig& cfg) {
  cfg.validate();
  const Index treated = ds.treatment().sum();
  if (treated == 0 || treated == ds.size()) {
    throw std::invalid_argument("no overlap: every unit is in the same treatment arm");
  }
  const Vector labels = ds.treatment().cast<double>();
  const LogisticModel m = fit_logistic(ds.covariates(), labels, nullptr, cfg.logistic);
  return predict_proba(m, ds.covariates(), cfg.clip);
}

SelectionScores estimate_selection_scores(const LongTermDataset& ds, const NuisanceConfig& cfg) {
  cfg.validate();
  const Index n = ds.size();
  const int T = ds.stages();
  SelectionScores s;
  s.factor.assign(static_cast<std::size_t>(T), OutcomeColumn(static_cast<std::size_t>(n)));
  s.product = s.factor;

  for (int t = 1; t <= T; ++t) {
    std::vector<Index> rows;
    for (Index i = 0; i < n; ++i) {
      if (t == 1 || ds.is_observed(i, t - 1)) rows.push_back(i);
    }
    s.fit_rows.push_back(static_cast<Index>(rows.size()));
    const auto ts = static_cast<std::size_t>(t - 1);
    if (rows.empty()) {
      s.degenerate.push_back(true);
      s.models.emplace_back();
      continue;
    }
    const Matrix f = selection_features(ds, t, rows);
    Vector labels(f.rows());
    for (std::size_t k = 0; k < rows.size(); ++k) labels(static_cast<Index>(k)) = ds.is_observed(rows[k], t);

    LogisticModel m = fit_logistic(f, labels, nullptr, cfg.logistic);
    Vector prob;
    if (m.degenerate && labels.minCoeff() == 1.0) {
      // Nobody drops out at this stage.
      prob = Vector::Ones(f.rows());
    } else {
      prob = predict_proba(m, f, cfg.clip);
    }
    s.degenerate.push_back(m.degenerate);
    s.models.push_back(std::move(m));

    for (std::size_t k = 0; k < rows.size(); ++k) {
      const auto i = static_cast<std::size_t>(rows[k]);
      const double q = prob(static_cast<Index>(k));
      s.factor[ts][i] = q;
      s.product[ts][i] = t == 1 ? q : *s.product[ts - 1][i] * q;
    }
  }
  return s;
}

NuisanceScores estimate_nuisances(const LongTermDataset& ds, const NuisanceConfig& cfg) {
  return {estimate_propensity(ds, cfg), estimate_selection_scores(ds, cfg)};
}

NuisanceScores known_nuisances(Vector propensity, std::vector<OutcomeColumn> selection) {
  NuisanceScores n;
  n.propensity = std::move(propensity);
  n.selection.product = std::move(selection);
  n.selection.fit_rows.assign(n.selection.product.size(), 0);
  n.selection.degenerate.assign(n.selection.product.size(), false);
  return n;
}

}  // namespace ltce
