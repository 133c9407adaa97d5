#pragma once

#include <map>
#include <string>
#include <vector>

#include "ltce/dgp.hpp"
#include "ltce/estimators.hpp"

namespace ltce {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class SweepAxis { None, Gamma, C, Lambda, T };

std::string to_string(SweepAxis a);
SweepAxis parse_sweep_axis(const std::string& s);

struct ExperimentConfig {
  DgpConfig dgp;
  EstimatorConfig estimators;
  std::vector<std::string> methods = method_tags();
  int trials = 20;
  std::uint64_t seed = 0;
  SweepAxis axis = SweepAxis::None;
  std::vector<double> sweep_values;
  std::string covariates = "synthetic";  // or csv:<path>
  std::string reference = "naive-or";
  // Nuisances from the simulator's true probabilities (Logistic missing only).
  bool oracle_nuisances = false;

  // Every key resolved to its final value, for the manifest.
  std::map<std::string, std::string> resolved;

  void validate() const;
  // The sweep values, or a single placeholder when there is no sweep.
  std::vector<double> grid() const;
  // Copy of the data and estimator settings at one sweep value.
  DgpConfig dgp_at(double value) const;
  EstimatorConfig estimators_at(double value) const;
};

// `key = value` lines; '#' starts a comment. Later keys override earlier ones.
std::map<std::string, std::string> read_key_values(const std::string& path);
std::map<std::string, std::string> parse_key_values(const std::string& text);
// "key=value" -> map entry; throws ConfigError on a malformed override.
std::pair<std::string, std::string> parse_override(const std::string& assignment);

// Builds a config from key/values. `style` is applied first so that its
// defaults can be overridden; unknown keys are rejected. The LTCE_SEED
// environment variable, when set, replaces the master seed.
ExperimentConfig build_config(const std::map<std::string, std::string>& kv, bool use_env = true);

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {},
                             bool use_env = true);

}  // namespace ltce
