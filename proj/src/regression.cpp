#include "ltce/regression.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace ltce {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be > 0");
  for (double lr : learning_rate_grid) {
    if (!(lr > 0.0)) throw std::invalid_argument("learning rate grid entries must be > 0");
  }
  if (max_epochs < 1) throw std::invalid_argument("max_epochs must be >= 1");
  if (patience < 1) throw std::invalid_argument("patience must be >= 1");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw std::invalid_argument("validation fraction must lie in [0, 1)");
  }
}

std::string to_string(RegressorKind k) {
  switch (k) {
    case RegressorKind::Network: return "network";
    case RegressorKind::Linear: return "linear";
    case RegressorKind::Mean: return "mean";
  }
  return "?";
}

RegressorKind parse_regressor_kind(const std::string& s) {
  if (s == "network" || s == "mlp") return RegressorKind::Network;
  if (s == "linear") return RegressorKind::Linear;
  if (s == "mean") return RegressorKind::Mean;
  throw std::invalid_argument("unknown regressor '" + s + "'");
}

Standardizer Standardizer::fit(const Matrix& x, const Vector& w) {
  const double total = w.sum();
  Standardizer s;
  s.mean = (x.transpose() * w) / total;
  s.scale.resize(x.cols());
  for (Index j = 0; j < x.cols(); ++j) {
    const double var = (w.array() * (x.col(j).array() - s.mean(j)).square()).sum() / total;
    s.scale(j) = var > 1e-24 ? std::sqrt(var) : 1.0;
  }
  return s;
}

Matrix Standardizer::apply(const Matrix& x) const {
  return ((x.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array()).matrix();
}

Vector FeedForwardRegressor::predict(const Matrix& features) const {
  return (net_.forward(inputs_.apply(features)).col(0).array() * target_scale_ + target_mean_).matrix();
}

Vector LinearRegressor::predict(const Matrix& features) const {
  if (features.cols() != coef_.size()) throw std::invalid_argument("feature width mismatch");
  return (features * coef_).array() + intercept_;
}

double weighted_squared_loss(const Mlp& net, const Matrix& x, const Vector& y, const Vector& w,
                             Vector* grad) {
  const double total = w.sum();
  Mlp::Cache cache;
  const Matrix out = net.forward(x, grad ? &cache : nullptr);
  const Vector resid = out.col(0) - y;
  const double loss = (w.array() * resid.array().square()).sum() / total;
  if (grad) {
    grad->setZero(net.parameter_count());
    const Matrix dout = (2.0 / total) * (w.array() * resid.array()).matrix();
    net.backward(cache, dout, *grad);
  }
  return loss;
}

Split validation_split(Index m, double fraction, std::uint64_t seed) {
  std::vector<Index> idx(static_cast<std::size_t>(m));
  std::iota(idx.begin(), idx.end(), Index{0});
  Rng rng(seed);
  for (Index j = m - 1; j > 0; --j) {
    std::uniform_int_distribution<Index> pick(0, j);
    std::swap(idx[static_cast<std::size_t>(j)], idx[static_cast<std::size_t>(pick(rng))]);
  }
  Index n_val = static_cast<Index>(std::floor(fraction * static_cast<double>(m)));
  if (m < 5 || fraction <= 0.0) n_val = 0;
  else if (n_val == 0) n_val = 1;
  Split s;
  s.train.assign(idx.begin(), idx.end() - n_val);
  s.validation.assign(idx.end() - n_val, idx.end());
  return s;
}

LoopResult run_adam(const Objective& train, const std::function<double(const Vector&)>& validate,
                    const Vector& init, const TrainConfig& cfg, double learning_rate) {
  Vector params = init;
  Adam opt(params.size(), learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon);
  LoopResult res;
  res.trace.learning_rate = learning_rate;
  res.best_params = params;
  double best = std::numeric_limits<double>::infinity();
  int stale = 0;
  Vector grad(params.size());
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const double loss = train(params, &grad);
    if (!std::isfinite(loss) || !grad.allFinite()) {
      throw TrainingError("non-finite training loss at epoch " + std::to_string(epoch) +
                          " (weights exploded)");
    }
    res.trace.train_loss.push_back(loss);
    if (validate) {
      const double v = validate(params);
      res.trace.validation_loss.push_back(v);
      if (v < best) {
        best = v;
        res.best_params = params;
        res.trace.best_epoch = epoch;
        stale = 0;
      } else if (++stale >= cfg.patience) {
        break;
      }
    } else {
      if (loss < best - cfg.tolerance) {
        best = loss;
        stale = 0;
      } else if (++stale >= cfg.patience) {
        break;
      }
    }
    opt.step(params, grad);
  }
  if (!validate) {
    res.best_params = params;
    res.trace.best_epoch = static_cast<int>(res.trace.train_loss.size()) - 1;
  }
  return res;
}

namespace {

Matrix take_rows(const Matrix& m, const std::vector<Index>& rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Index>(k)) = m.row(rows[k]);
  return out;
}

Vector take(const Vector& v, const std::vector<Index>& rows) {
  Vector out(static_cast<Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) out(static_cast<Index>(k)) = v(rows[k]);
  return out;
}

void check_regression_inputs(const Matrix& x, const Vector& y, const Vector& w) {
  if (y.size() != x.rows() || w.size() != x.rows()) throw std::invalid_argument("row count mismatch");
  if ((w.array() < 0.0).any() || !w.allFinite()) throw std::invalid_argument("weights must be finite and nonnegative");
  if (!x.allFinite() || !y.allFinite()) throw std::invalid_argument("features and targets must be finite");
}

std::vector<Index> positive_rows(const Vector& w) {
  std::vector<Index> rows;
  for (Index i = 0; i < w.size(); ++i) {
    if (w(i) > 0.0) rows.push_back(i);
  }
  return rows;
}

}  // namespace

std::shared_ptr<const FeedForwardRegressor> train_feedforward(const Matrix& x_all, const Vector& y_all,
                                                              const Vector& w_all,
                                                              const TrainConfig& cfg,
                                                              std::uint64_t seed) {
  cfg.validate();
  check_regression_inputs(x_all, y_all, w_all);
  const auto rows = positive_rows(w_all);
  if (rows.size() < 2) throw std::invalid_argument("need at least two rows with positive weight");
  const Matrix x = take_rows(x_all, rows);
  const Vector y = take(y_all, rows);
  const Vector w = take(w_all, rows);

  Standardizer inputs = Standardizer::fit(x, w);
  const double total = w.sum();
  const double y_mean = w.dot(y) / total;
  const double y_var = (w.array() * (y.array() - y_mean).square()).sum() / total;
  const double y_scale = y_var > 1e-24 ? std::sqrt(y_var) : 1.0;
  const Matrix xs = inputs.apply(x);
  const Vector ys = (y.array() - y_mean) / y_scale;

  Split split;
  if (cfg.early_stopping) {
    split = validation_split(static_cast<Index>(rows.size()), cfg.validation_fraction,
                             derive_seed(seed, {seed_tag("split")}));
  } else {
    split.train.resize(rows.size());
    std::iota(split.train.begin(), split.train.end(), Index{0});
  }
  const Matrix x_tr = take_rows(xs, split.train);
  const Vector y_tr = take(ys, split.train);
  const Vector w_tr = take(w, split.train);
  const Matrix x_va = take_rows(xs, split.validation);
  const Vector y_va = take(ys, split.validation);
  const Vector w_va = take(w, split.validation);
  const bool has_validation = !split.validation.empty() && w_va.sum() > 0.0 && w_tr.sum() > 0.0;

  std::vector<Index> widths{x.cols()};
  widths.insert(widths.end(), cfg.hidden.begin(), cfg.hidden.end());
  widths.push_back(1);
  Mlp net(widths, cfg.activation);
  Rng init_rng(derive_seed(seed, {seed_tag("init")}));
  net.initialize(init_rng);
  const Vector init = net.parameters();

  Mlp work = net;
  Objective train = [&](const Vector& p, Vector* g) {
    work.set_parameters(p);
    return weighted_squared_loss(work, x_tr, y_tr, w_tr, g);
  };
  std::function<double(const Vector&)> validate;
  if (has_validation) {
    validate = [&](const Vector& p) {
      work.set_parameters(p);
      return weighted_squared_loss(work, x_va, y_va, w_va, nullptr);
    };
  }

  std::vector<double> rates = cfg.learning_rate_grid;
  if (rates.empty()) rates.push_back(cfg.learning_rate);
  LoopResult best;
  double best_score = std::numeric_limits<double>::infinity();
  for (double lr : rates) {
    LoopResult r = run_adam(train, validate, init, cfg, lr);
    const double score = has_validation ? r.trace.validation_loss[static_cast<std::size_t>(r.trace.best_epoch)]
                                        : r.trace.train_loss.back();
    if (score < best_score || best.best_params.size() == 0) {
      best_score = score;
      best = std::move(r);
    }
  }
  net.set_parameters(best.best_params);
  return std::make_shared<FeedForwardRegressor>(std::move(net), std::move(inputs), y_mean, y_scale,
                                                std::move(best.trace));
}

std::shared_ptr<const LinearRegressor> fit_linear(const Matrix& x, const Vector& y, const Vector& w) {
  check_regression_inputs(x, y, w);
  const auto rows = positive_rows(w);
  if (rows.empty()) throw std::invalid_argument("need at least one row with positive weight");
  const Index m = static_cast<Index>(rows.size());
  Matrix design(m, x.cols() + 1);
  Vector rhs(m);
  for (Index k = 0; k < m; ++k) {
    const Index i = rows[static_cast<std::size_t>(k)];
    const double sw = std::sqrt(w(i));
    design(k, 0) = sw;
    design.row(k).tail(x.cols()) = sw * x.row(i);
    rhs(k) = sw * y(i);
  }
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod;
  cod.setThreshold(1e-10);
  cod.compute(design);
  const Vector beta = cod.solve(rhs);
  return std::make_shared<LinearRegressor>(beta(0), beta.tail(x.cols()));
}

RegressorPtr fit_regressor(const RegressorSpec& spec, const Matrix& x, const Vector& y,
                           const Vector& w, std::uint64_t seed) {
  switch (spec.kind) {
    case RegressorKind::Network:
      return train_feedforward(x, y, w, spec.train, seed);
    case RegressorKind::Linear:
      return fit_linear(x, y, w);
    case RegressorKind::Mean: {
      check_regression_inputs(x, y, w);
      const double total = w.sum();
      if (!(total > 0.0)) throw std::invalid_argument("weights sum to zero");
      return std::make_shared<MeanRegressor>(w.dot(y) / total);
    }
  }
  throw std::invalid_argument("unknown regressor kind");
}

}  // namespace ltce
