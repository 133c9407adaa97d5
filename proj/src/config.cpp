#include "ltce/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

namespace ltce {

std::string to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::None: return "none";
    case SweepAxis::Gamma: return "gamma";
    case SweepAxis::C: return "C";
    case SweepAxis::Lambda: return "lambda";
    case SweepAxis::T: return "T";
  }
  return "none";
}

SweepAxis parse_sweep_axis(const std::string& s) {
  if (s == "none" || s.empty()) return SweepAxis::None;
  if (s == "gamma") return SweepAxis::Gamma;
  if (s == "C" || s == "c") return SweepAxis::C;
  if (s == "lambda") return SweepAxis::Lambda;
  if (s == "T" || s == "t" || s == "stages") return SweepAxis::T;
  throw ConfigError("unknown sweep axis: " + s);
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string format_double(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) throw ConfigError(key + ": not a number: " + v);
  return out;
}

long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) throw ConfigError(key + ": not an integer: " + v);
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) throw ConfigError(key + ": not a seed: " + v);
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key + ": not a boolean: " + v);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> to_doubles(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& s : split_list(v)) out.push_back(to_double(key, s));
  return out;
}

std::vector<Index> to_widths(const std::string& key, const std::string& v) {
  std::vector<Index> out;
  for (const auto& s : split_list(v)) {
    const long long w = to_int(key, s);
    if (w < 1) throw ConfigError(key + ": widths must be positive");
    out.push_back(static_cast<Index>(w));
  }
  return out;
}

template <class T>
std::string join(const std::vector<T>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_floating_point_v<T>) {
      out += format_double(xs[i]);
    } else if constexpr (std::is_arithmetic_v<T>) {
      out += std::to_string(xs[i]);
    } else {
      out += xs[i];
    }
  }
  return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string& key, const std::string& value)>;

void add_train_keys(std::map<std::string, Setter>& m, const std::string& prefix,
                    TrainConfig& (*pick)(ExperimentConfig&)) {
  m[prefix + ".lr"] = [pick](ExperimentConfig& c, const std::string& k, const std::string& v) {
    pick(c).learning_rate = to_double(k, v);
    pick(c).learning_rate_grid.clear();
  };
  m[prefix + ".lr_grid"] = [pick](ExperimentConfig& c, const std::string& k, const std::string& v) {
    pick(c).learning_rate_grid = to_doubles(k, v);
  };
  m[prefix + ".hidden"] = [pick](ExperimentConfig& c, const std::string& k, const std::string& v) {
    pick(c).hidden = to_widths(k, v);
  };
  m[prefix + ".max_epochs"] = [pick](ExperimentConfig& c, const std::string& k, const std::string& v) {
    pick(c).max_epochs = static_cast<int>(to_int(k, v));
  };
  m[prefix + ".patience"] = [pick](ExperimentConfig& c, const std::string& k, const std::string& v) {
    pick(c).patience = static_cast<int>(to_int(k, v));
  };
  m[prefix + ".early_stopping"] = [pick](ExperimentConfig& c, const std::string& k, const std::string& v) {
    pick(c).early_stopping = to_bool(k, v);
  };
  m[prefix + ".tolerance"] = [pick](ExperimentConfig& c, const std::string& k, const std::string& v) {
    pick(c).tolerance = to_double(k, v);
  };
  m[prefix + ".validation_fraction"] = [pick](ExperimentConfig& c, const std::string& k, const std::string& v) {
    pick(c).validation_fraction = to_double(k, v);
  };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> m;
    auto dbl = [&m](const std::string& key, double DgpConfig::*field) {
      m[key] = [field](ExperimentConfig& c, const std::string& k, const std::string& v) {
        c.dgp.*field = to_double(k, v);
      };
    };
    dbl("c1", &DgpConfig::c1);
    dbl("c2", &DgpConfig::c2);
    dbl("mu0", &DgpConfig::mu0);
    dbl("mu1", &DgpConfig::mu1);
    dbl("sigma0", &DgpConfig::sigma0);
    dbl("sigma1", &DgpConfig::sigma1);
    dbl("gamma", &DgpConfig::gamma);
    dbl("treatment_coef_scale", &DgpConfig::treatment_coef_scale);
    dbl("selection_slope", &DgpConfig::selection_slope);
    m["n"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.dgp.n = to_int(k, v); };
    m["p"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.dgp.p = to_int(k, v); };
    m["stages"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.dgp.stages = static_cast<int>(to_int(k, v));
    };
    m["tau_x_draws"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.dgp.tau_x_draws = static_cast<int>(to_int(k, v));
    };
    m["missing"] = [](ExperimentConfig& c, const std::string&, const std::string& v) {
      c.dgp.missing = parse_missing_mechanism(v);
    };
    m["methods"] = [](ExperimentConfig& c, const std::string&, const std::string& v) { c.methods = split_list(v); };
    m["trials"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.trials = static_cast<int>(to_int(k, v));
    };
    m["seed"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.seed = to_u64(k, v); };
    m["sweep_axis"] = [](ExperimentConfig& c, const std::string&, const std::string& v) {
      c.axis = parse_sweep_axis(v);
    };
    m["sweep_values"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.sweep_values = to_doubles(k, v);
    };
    m["covariates"] = [](ExperimentConfig& c, const std::string&, const std::string& v) { c.covariates = v; };
    m["reference"] = [](ExperimentConfig& c, const std::string&, const std::string& v) { c.reference = v; };
    m["oracle_nuisances"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.oracle_nuisances = to_bool(k, v);
    };
    m["lambda"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.estimators.balance.lambda1 = c.estimators.balance.lambda2 = to_double(k, v);
    };
    m["lambda1"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.estimators.balance.lambda1 = to_double(k, v);
    };
    m["lambda2"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.estimators.balance.lambda2 = to_double(k, v);
    };
    m["seqmsm_feed_observed"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.estimators.seqmsm_feed_observed = to_bool(k, v);
    };
    m["nuisance.clip"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.estimators.nuisance.clip = to_double(k, v);
    };
    m["outcome.kind"] = [](ExperimentConfig& c, const std::string&, const std::string& v) {
      c.estimators.outcome.kind = parse_regressor_kind(v);
    };
    m["baseline.kind"] = [](ExperimentConfig& c, const std::string&, const std::string& v) {
      c.estimators.baseline.kind = parse_regressor_kind(v);
    };
    add_train_keys(m, "outcome", [](ExperimentConfig& c) -> TrainConfig& { return c.estimators.outcome.train; });
    add_train_keys(m, "baseline", [](ExperimentConfig& c) -> TrainConfig& { return c.estimators.baseline.train; });
    add_train_keys(m, "balance", [](ExperimentConfig& c) -> TrainConfig& { return c.estimators.balance.train; });
    m.erase("balance.hidden");  // head widths are balance.head_hidden
    m["balance.head_hidden"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.estimators.balance.head_hidden = to_widths(k, v);
    };
    m["balance.rep_width"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.estimators.balance.rep_width = to_int(k, v);
    };
    m["balance.encoder_layers"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.estimators.balance.encoder_layers = static_cast<int>(to_int(k, v));
    };
    return m;
  }();
  return table;
}

void write_train(std::map<std::string, std::string>& out, const std::string& prefix, const TrainConfig& t) {
  out[prefix + ".lr"] = format_double(t.learning_rate);
  out[prefix + ".lr_grid"] = join(t.learning_rate_grid);
  if (prefix != "balance") out[prefix + ".hidden"] = join(t.hidden);
  out[prefix + ".max_epochs"] = std::to_string(t.max_epochs);
  out[prefix + ".patience"] = std::to_string(t.patience);
  out[prefix + ".early_stopping"] = t.early_stopping ? "true" : "false";
  out[prefix + ".tolerance"] = format_double(t.tolerance);
  out[prefix + ".validation_fraction"] = format_double(t.validation_fraction);
}

std::map<std::string, std::string> resolve(const ExperimentConfig& c) {
  std::map<std::string, std::string> r;
  const auto& d = c.dgp;
  r["style"] = to_string(d.style);
  r["n"] = std::to_string(d.n);
  r["p"] = std::to_string(d.p);
  r["stages"] = std::to_string(d.stages);
  r["c1"] = format_double(d.c1);
  r["c2"] = format_double(d.c2);
  r["mu0"] = format_double(d.mu0);
  r["mu1"] = format_double(d.mu1);
  r["sigma0"] = format_double(d.sigma0);
  r["sigma1"] = format_double(d.sigma1);
  r["gamma"] = format_double(d.gamma);
  r["treatment_coef_scale"] = format_double(d.treatment_coef_scale);
  r["missing"] = to_string(d.missing);
  r["selection_slope"] = format_double(d.selection_slope);
  r["tau_x_draws"] = std::to_string(d.tau_x_draws);
  r["methods"] = join(c.methods);
  r["trials"] = std::to_string(c.trials);
  r["seed"] = std::to_string(c.seed);
  r["sweep_axis"] = to_string(c.axis);
  r["sweep_values"] = join(c.sweep_values);
  r["covariates"] = c.covariates;
  r["reference"] = c.reference;
  r["oracle_nuisances"] = c.oracle_nuisances ? "true" : "false";
  const auto& e = c.estimators;
  r["lambda1"] = format_double(e.balance.lambda1);
  r["lambda2"] = format_double(e.balance.lambda2);
  r["seqmsm_feed_observed"] = e.seqmsm_feed_observed ? "true" : "false";
  r["nuisance.clip"] = format_double(e.nuisance.clip);
  r["outcome.kind"] = to_string(e.outcome.kind);
  r["baseline.kind"] = to_string(e.baseline.kind);
  write_train(r, "outcome", e.outcome.train);
  write_train(r, "baseline", e.baseline.train);
  write_train(r, "balance", e.balance.train);
  r["balance.head_hidden"] = join(e.balance.head_hidden);
  r["balance.rep_width"] = std::to_string(e.balance.rep_width);
  r["balance.encoder_layers"] = std::to_string(e.balance.encoder_layers);
  return r;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (trials < 1) throw ConfigError("trials must be >= 1");
  if (methods.empty()) throw ConfigError("method roster is empty");
  for (const auto& m : methods) {
    if (std::find(method_tags().begin(), method_tags().end(), m) == method_tags().end()) {
      throw ConfigError("unknown method tag: " + m);
    }
  }
  if (axis != SweepAxis::None && sweep_values.empty()) throw ConfigError("sweep axis set without sweep values");
  if (covariates != "synthetic" && covariates.rfind("csv:", 0) != 0) {
    throw ConfigError("covariates must be 'synthetic' or 'csv:<path>'");
  }
  if (oracle_nuisances && dgp.missing != MissingMechanism::Logistic) {
    throw ConfigError("oracle nuisances need the logistic missing mechanism");
  }
  try {
    for (double v : grid()) {
      dgp_at(v).validate();
      const auto e = estimators_at(v);
      e.nuisance.validate();
      e.balance.validate();
      e.outcome.train.validate();
      e.baseline.train.validate();
    }
  } catch (const std::invalid_argument& err) {
    throw ConfigError(err.what());
  }
}

std::vector<double> ExperimentConfig::grid() const {
  if (axis == SweepAxis::None) return {0.0};
  return sweep_values;
}

DgpConfig ExperimentConfig::dgp_at(double value) const {
  DgpConfig d = dgp;
  switch (axis) {
    case SweepAxis::Gamma:
      d.gamma = value;
      break;
    case SweepAxis::C:
      (d.style == OutcomeStyle::Continuous ? d.c1 : d.c2) = value;
      break;
    case SweepAxis::T:
      if (value != std::floor(value)) throw ConfigError("T sweep values must be integers");
      d.stages = static_cast<int>(value);
      break;
    default:
      break;
  }
  return d;
}

EstimatorConfig ExperimentConfig::estimators_at(double value) const {
  EstimatorConfig e = estimators;
  if (axis == SweepAxis::Lambda) e.balance.lambda1 = e.balance.lambda2 = value;
  return e;
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty() || line.front() == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    out[key] = value;
  }
  return out;
}

std::map<std::string, std::string> read_key_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_key_values(ss.str());
}

std::pair<std::string, std::string> parse_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override must look like key=value: " + assignment);
  const std::string key = trim(assignment.substr(0, eq));
  if (key.empty()) throw ConfigError("override has an empty key: " + assignment);
  return {key, trim(assignment.substr(eq + 1))};
}

ExperimentConfig build_config(const std::map<std::string, std::string>& kv, bool use_env) {
  ExperimentConfig c;
  const auto style = kv.find("style");
  try {
    if (style != kv.end()) c.dgp = DgpConfig::defaults(parse_outcome_style(style->second));
    for (const auto& [key, value] : kv) {
      if (key == "style") continue;
      const auto it = setters().find(key);
      if (it == setters().end()) throw ConfigError("unknown config key: " + key);
      it->second(c, key, value);
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (use_env) {
    if (const char* env = std::getenv("LTCE_SEED"); env && *env) c.seed = to_u64("LTCE_SEED", env);
  }
  c.validate();
  c.resolved = resolve(c);
  return c;
}

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides, bool use_env) {
  auto kv = read_key_values(path);
  for (const auto& o : overrides) {
    auto [k, v] = parse_override(o);
    kv[k] = v;
  }
  return build_config(kv, use_env);
}

}  // namespace ltce
