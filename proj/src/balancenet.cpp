#include "ltce/balancenet.hpp"

#include <cmath>
#include <limits>

#include <json.hpp>

namespace ltce {

TrainConfig default_balance_training() {
  TrainConfig t;
  t.activation = Activation::Elu;
  t.learning_rate_grid = {0.001, 0.005, 0.01};
  return t;
}

void BalanceConfig::validate() const {
  if (!(lambda1 >= 0.0 && lambda2 >= 0.0)) throw std::invalid_argument("imbalance penalties must be >= 0");
  if (rep_width < 1 || encoder_layers < 1) throw std::invalid_argument("encoder must have at least one layer");
  train.validate();
}

void StageInput::validate() const {
  const Index n = features.rows();
  if (treatment.size() != n || observed.size() != n || static_cast<Index>(target.size()) != n) {
    throw std::invalid_argument("stage input columns have inconsistent lengths");
  }
  if (!features.allFinite()) throw std::invalid_argument("stage features must be finite");
  for (Index i = 0; i < n; ++i) {
    if (target[static_cast<std::size_t>(i)].has_value() != (observed(i) == 1)) {
      throw std::invalid_argument("stage target must be present exactly on observed rows");
    }
  }
}

BlockParams BlockParams::create(Index feature_width, const BalanceConfig& cfg, Rng& rng) {
  BlockParams b;
  b.treatment_input = cfg.treatment_input;
  std::vector<Index> enc{feature_width + (cfg.treatment_input ? 1 : 0)};
  for (int l = 0; l < cfg.encoder_layers; ++l) enc.push_back(cfg.rep_width);
  std::vector<Index> head{cfg.rep_width};
  head.insert(head.end(), cfg.head_hidden.begin(), cfg.head_hidden.end());
  head.push_back(1);
  b.encoder = Mlp(enc, cfg.train.activation, true);
  b.head0 = Mlp(head, cfg.train.activation);
  b.head1 = Mlp(head, cfg.train.activation);
  b.encoder.initialize(rng);
  b.head0.initialize(rng);
  b.head1.initialize(rng);
  b.inputs.mean = Vector::Zero(feature_width);
  b.inputs.scale = Vector::Ones(feature_width);
  return b;
}

Index BlockParams::parameter_count() const {
  return encoder.parameter_count() + head0.parameter_count() + head1.parameter_count();
}

Vector BlockParams::parameters() const {
  Vector p(parameter_count());
  p << encoder.parameters(), head0.parameters(), head1.parameters();
  return p;
}

void BlockParams::set_parameters(const Vector& p) {
  const Index e = encoder.parameter_count();
  const Index h = head0.parameter_count();
  encoder.set_parameters(p.head(e));
  head0.set_parameters(p.segment(e, h));
  head1.set_parameters(p.tail(head1.parameter_count()));
}

namespace {

Matrix encoder_input(const BlockParams& b, const Matrix& features, const IntVector& arms) {
  const Matrix z = b.inputs.apply(features);
  if (!b.treatment_input) return z;
  Matrix out(z.rows(), z.cols() + 1);
  out.leftCols(z.cols()) = z;
  out.col(z.cols()) = arms.cast<double>();
  return out;
}

Matrix take_rows(const Matrix& m, const std::vector<Index>& rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Index>(k)) = m.row(rows[k]);
  return out;
}

// Stage rows in the block's standardized space, grouped for the loss.
struct Prepared {
  Matrix z;  // encoder input
  std::vector<Index> observed, missing, treated, control;
  std::vector<Index> factual[2];  // observed rows by arm
  Vector y;                       // standardized target (0 where missing)
};

Prepared prepare(const BlockParams& b, const StageInput& in, const std::vector<Index>& rows) {
  Prepared p;
  Matrix feats = take_rows(in.features, rows);
  IntVector arms(static_cast<Index>(rows.size()));
  p.y = Vector::Zero(static_cast<Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const Index i = rows[k];
    const Index r = static_cast<Index>(k);
    arms(r) = in.treatment(i);
    (in.treatment(i) ? p.treated : p.control).push_back(r);
    if (in.observed(i)) {
      p.observed.push_back(r);
      p.factual[in.treatment(i)].push_back(r);
      p.y(r) = (*in.target[static_cast<std::size_t>(i)] - b.target_mean) / b.target_scale;
    } else {
      p.missing.push_back(r);
    }
  }
  p.z = encoder_input(b, feats, arms);
  return p;
}

Vector group_mean(const Matrix& phi, const std::vector<Index>& rows) {
  Vector m = Vector::Zero(phi.cols());
  for (Index r : rows) m += phi.row(r).transpose();
  return m / static_cast<double>(rows.size());
}

// Adds lambda * MMD and its gradient wrt phi; returns the MMD value.
double add_mmd(const Matrix& phi, const std::vector<Index>& a, const std::vector<Index>& b,
               double lambda, Matrix* dphi, bool& empty) {
  if (a.empty() || b.empty()) {
    empty = true;
    return 0.0;
  }
  const Vector diff = group_mean(phi, a) - group_mean(phi, b);
  if (dphi && lambda != 0.0) {
    const Vector ga = (2.0 * lambda / static_cast<double>(a.size())) * diff;
    const Vector gb = (2.0 * lambda / static_cast<double>(b.size())) * diff;
    for (Index r : a) dphi->row(r) += ga.transpose();
    for (Index r : b) dphi->row(r) -= gb.transpose();
  }
  return diff.squaredNorm();
}

BlockLoss loss_prepared(const BlockParams& b, const Prepared& p, double lambda1, double lambda2,
                        Vector* grad, bool penalties) {
  BlockLoss out;
  Mlp::Cache enc_cache;
  const Matrix phi = b.encoder.forward(p.z, grad ? &enc_cache : nullptr);
  Matrix dphi;
  Vector g_head[2];
  if (grad) dphi = Matrix::Zero(phi.rows(), phi.cols());

  const double n_obs = static_cast<double>(p.observed.size());
  if (n_obs == 0) throw std::invalid_argument("stage has no observed rows");
  const Mlp* heads[2] = {&b.head0, &b.head1};
  for (int arm = 0; arm < 2; ++arm) {
    g_head[arm] = Vector::Zero(heads[arm]->parameter_count());
    const auto& rows = p.factual[arm];
    if (rows.empty()) continue;
    Mlp::Cache hc;
    const Matrix out_arm = heads[arm]->forward(take_rows(phi, rows), grad ? &hc : nullptr);
    Vector resid(static_cast<Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) resid(static_cast<Index>(k)) = out_arm(static_cast<Index>(k), 0) - p.y(rows[k]);
    out.factual += resid.squaredNorm();
    if (grad) {
      Matrix dphi_arm;
      heads[arm]->backward(hc, (2.0 / n_obs) * resid, g_head[arm], &dphi_arm);
      for (std::size_t k = 0; k < rows.size(); ++k) dphi.row(rows[k]) += dphi_arm.row(static_cast<Index>(k));
    }
  }
  out.factual /= n_obs;

  if (penalties) {
    out.imbalance_missing = add_mmd(phi, p.observed, p.missing, lambda1, grad ? &dphi : nullptr, out.empty_group);
    out.imbalance_treatment = add_mmd(phi, p.treated, p.control, lambda2, grad ? &dphi : nullptr, out.empty_group);
  }
  out.total = out.factual + lambda1 * out.imbalance_missing + lambda2 * out.imbalance_treatment;

  if (grad) {
    Vector g_enc = Vector::Zero(b.encoder.parameter_count());
    b.encoder.backward(enc_cache, dphi, g_enc);
    grad->resize(b.parameter_count());
    *grad << g_enc, g_head[0], g_head[1];
  }
  return out;
}

std::vector<Index> all_rows(Index n) {
  std::vector<Index> r(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) r[static_cast<std::size_t>(i)] = i;
  return r;
}

}  // namespace

Matrix BlockParams::represent(const Matrix& features, const IntVector& arms) const {
  return encoder.forward(encoder_input(*this, features, arms));
}

Vector BlockParams::predict(const Matrix& features, int arm) const {
  const IntVector arms = IntVector::Constant(features.rows(), arm);
  const Matrix phi = represent(features, arms);
  const Mlp& head = arm == 1 ? head1 : head0;
  return (head.forward(phi).col(0).array() * target_scale + target_mean).matrix();
}

MmdValue linear_mmd(const Matrix& a, const Matrix& b) {
  if (a.rows() == 0 || b.rows() == 0) return {0.0, true};
  if (a.cols() != b.cols()) throw std::invalid_argument("representation widths differ");
  return {(a.colwise().mean() - b.colwise().mean()).squaredNorm(), false};
}

BlockLoss block_loss(const BlockParams& params, const StageInput& input, double lambda1,
                     double lambda2, Vector* grad, bool penalties) {
  input.validate();
  const Prepared p = prepare(params, input, all_rows(input.size()));
  BlockLoss out = loss_prepared(params, p, lambda1, lambda2, grad, penalties);
  if (!std::isfinite(out.total)) throw TrainingError("non-finite block loss");
  return out;
}

BlockParams train_block(const StageInput& input, const BalanceConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  input.validate();
  const Index n = input.size();
  std::vector<Index> observed;
  Index per_arm[2] = {0, 0};
  for (Index i = 0; i < n; ++i) {
    if (input.observed(i)) {
      observed.push_back(i);
      ++per_arm[input.treatment(i)];
    }
  }
  if (per_arm[0] == 0 || per_arm[1] == 0) {
    throw std::invalid_argument("both arms need observed rows to train a balancing block");
  }

  Rng rng(derive_seed(seed, {seed_tag("init")}));
  BlockParams block = BlockParams::create(input.features.cols(), cfg, rng);
  block.inputs = Standardizer::fit(input.features, Vector::Ones(n));
  double mean = 0.0, sq = 0.0;
  for (Index i : observed) mean += *input.target[static_cast<std::size_t>(i)];
  mean /= static_cast<double>(observed.size());
  for (Index i : observed) {
    const double d = *input.target[static_cast<std::size_t>(i)] - mean;
    sq += d * d;
  }
  const double var = sq / static_cast<double>(observed.size());
  block.target_mean = mean;
  block.target_scale = var > 1e-24 ? std::sqrt(var) : 1.0;

  // Validation rows come from the observed rows only; missing rows always
  // stay in training where they feed the imbalance terms.
  std::vector<Index> train_rows, val_rows;
  std::vector<bool> is_val(static_cast<std::size_t>(n), false);
  if (cfg.train.early_stopping) {
    const Split s = validation_split(static_cast<Index>(observed.size()), cfg.train.validation_fraction,
                                     derive_seed(seed, {seed_tag("split")}));
    for (Index k : s.validation) is_val[static_cast<std::size_t>(observed[static_cast<std::size_t>(k)])] = true;
  }
  for (Index i = 0; i < n; ++i) (is_val[static_cast<std::size_t>(i)] ? val_rows : train_rows).push_back(i);

  const Prepared train = prepare(block, input, train_rows);
  if (train.factual[0].empty() || train.factual[1].empty()) {
    // Tiny arms: fall back to training on every row.
    val_rows.clear();
    train_rows = all_rows(n);
  }
  const Prepared train_set = train_rows.size() == static_cast<std::size_t>(n) ? prepare(block, input, train_rows) : train;
  const Prepared val_set = prepare(block, input, val_rows);

  BlockParams work = block;
  Objective objective = [&](const Vector& p, Vector* g) {
    work.set_parameters(p);
    return loss_prepared(work, train_set, cfg.lambda1, cfg.lambda2, g, cfg.penalties).total;
  };
  std::function<double(const Vector&)> validate;
  if (!val_rows.empty()) {
    validate = [&](const Vector& p) {
      work.set_parameters(p);
      return loss_prepared(work, val_set, 0.0, 0.0, nullptr, false).factual;
    };
  }

  std::vector<double> rates = cfg.train.learning_rate_grid;
  if (rates.empty()) rates.push_back(cfg.train.learning_rate);
  const Vector init = block.parameters();
  LoopResult best;
  double best_score = std::numeric_limits<double>::infinity();
  for (double lr : rates) {
    LoopResult r = run_adam(objective, validate, init, cfg.train, lr);
    const double score = validate ? r.trace.validation_loss[static_cast<std::size_t>(r.trace.best_epoch)]
                                  : r.trace.train_loss.back();
    if (score < best_score || best.best_params.size() == 0) {
      best_score = score;
      best = std::move(r);
    }
  }
  block.set_parameters(best.best_params);
  block.trace = std::move(best.trace);
  return block;
}

namespace {

Matrix hstack(const Matrix& x, const Matrix& extra, Index extra_cols) {
  Matrix out(x.rows(), x.cols() + extra_cols);
  out.leftCols(x.cols()) = x;
  if (extra_cols > 0) out.rightCols(extra_cols) = extra.leftCols(extra_cols);
  return out;
}

BalanceNetResult run_single_block(const LongTermDataset& ds, const BalanceConfig& cfg,
                                  std::uint64_t seed, const std::string& method) {
  const int T = ds.stages();
  const auto rows = observed_subset(ds, T);
  StageInput in;
  in.features = take_rows(ds.covariates(), rows);
  in.treatment.resize(static_cast<Index>(rows.size()));
  in.observed = IntVector::Ones(static_cast<Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    in.treatment(static_cast<Index>(k)) = ds.treatment()(rows[k]);
    in.target.push_back(ds.long_term()[static_cast<std::size_t>(rows[k])]);
  }
  BalanceNetResult res;
  res.blocks.push_back(train_block(in, cfg, derive_seed(seed, {static_cast<std::uint64_t>(T)})));
  const BlockParams& b = res.blocks.back();
  res.estimate.method = method;
  res.estimate.cate_hat = b.predict(ds.covariates(), 1) - b.predict(ds.covariates(), 0);
  res.estimate.tau_hat = res.estimate.cate_hat.mean();
  res.estimate.diagnostics["rows_stage" + std::to_string(T)] = static_cast<double>(rows.size());
  res.estimate.diagnostics["best_epoch_stage" + std::to_string(T)] = b.trace.best_epoch;
  return res;
}

}  // namespace

BalanceNetResult run_balancenet(const LongTermDataset& ds, const BalanceConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (cfg.single_block) return run_single_block(ds, cfg, seed, "balancenet");

  const Index n = ds.size();
  const int T = ds.stages();
  const Matrix& x = ds.covariates();
  // Stage values fed forward for training (observed, else factual-arm head
  // output) and the pure arm-a chains used for evaluation.
  Matrix filled = Matrix::Zero(n, T - 1);
  Matrix chain[2] = {Matrix::Zero(n, T - 1), Matrix::Zero(n, T - 1)};

  BalanceNetResult res;
  res.estimate.method = "balancenet";
  for (int t = 1; t <= T; ++t) {
    StageInput in;
    in.features = hstack(x, filled, t - 1);
    in.treatment = ds.treatment();
    in.observed.resize(n);
    in.target = ds.outcome(t);
    for (Index i = 0; i < n; ++i) in.observed(i) = ds.is_observed(i, t) ? 1 : 0;

    res.blocks.push_back(train_block(in, cfg, derive_seed(seed, {static_cast<std::uint64_t>(t)})));
    const BlockParams& b = res.blocks.back();
    res.estimate.diagnostics["rows_stage" + std::to_string(t)] = static_cast<double>(in.observed.sum());
    res.estimate.diagnostics["best_epoch_stage" + std::to_string(t)] = b.trace.best_epoch;

    Vector arm_pred[2];
    for (int arm = 0; arm < 2; ++arm) arm_pred[arm] = b.predict(hstack(x, chain[arm], t - 1), arm);
    if (t == T) {
      res.estimate.cate_hat = arm_pred[1] - arm_pred[0];
      break;
    }
    for (int arm = 0; arm < 2; ++arm) chain[arm].col(t - 1) = arm_pred[arm];
    const Vector fact0 = b.predict(in.features, 0);
    const Vector fact1 = b.predict(in.features, 1);
    for (Index i = 0; i < n; ++i) {
      const auto& v = ds.outcome(t)[static_cast<std::size_t>(i)];
      filled(i, t - 1) = v ? *v : (ds.treatment()(i) ? fact1(i) : fact0(i));
    }
  }
  res.estimate.tau_hat = res.estimate.cate_hat.mean();
  return res;
}

BalanceNetResult run_cfr(const LongTermDataset& ds, const BalanceConfig& cfg_in, std::uint64_t seed) {
  BalanceConfig cfg = cfg_in;
  cfg.lambda1 = 0.0;
  cfg.treatment_input = false;
  cfg.single_block = true;
  cfg.validate();
  return run_single_block(ds, cfg, seed, "cfr");
}

std::string blocks_to_json(const std::vector<BlockParams>& blocks) {
  auto net = [](const Mlp& m) {
    nlohmann::json j;
    j["widths"] = m.widths();
    j["activation"] = m.activation() == Activation::Elu ? "elu" : m.activation() == Activation::Relu ? "relu" : "identity";
    j["parameters"] = std::vector<double>(m.parameters().data(), m.parameters().data() + m.parameter_count());
    return j;
  };
  nlohmann::json out = nlohmann::json::array();
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const auto& b = blocks[k];
    nlohmann::json j;
    j["block"] = k + 1;
    j["treatment_input"] = b.treatment_input;
    j["encoder"] = net(b.encoder);
    j["head0"] = net(b.head0);
    j["head1"] = net(b.head1);
    j["input_mean"] = std::vector<double>(b.inputs.mean.data(), b.inputs.mean.data() + b.inputs.mean.size());
    j["input_scale"] = std::vector<double>(b.inputs.scale.data(), b.inputs.scale.data() + b.inputs.scale.size());
    j["target_mean"] = b.target_mean;
    j["target_scale"] = b.target_scale;
    j["best_epoch"] = b.trace.best_epoch;
    out.push_back(std::move(j));
  }
  return out.dump();
}

}  // namespace ltce
