#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ltce/config.hpp"
#include "ltce/metrics.hpp"

namespace ltce {

struct RunOptions {
  int jobs = 1;
  bool dump_nuisance = false;
  bool dump_model = false;
  bool quiet = true;
};

// One line of results.jsonl.
struct ResultRecord {
  std::string sweep_axis;
  double sweep_value = 0.0;
  int trial = 0;
  std::string method;
  std::optional<double> tau_hat;
  std::optional<double> eps_ate;
  std::optional<double> eps_cate;
  std::map<std::string, double> diagnostics;
  std::string error;  // non-empty when the method failed in this trial

  std::string to_json() const;
  static ResultRecord from_json(const std::string& line);
};

// Seeds of one (sweep index, trial) job. Data seeds depend on the trial only,
// so every sweep value sees the same draws; model seeds also depend on the
// sweep index.
std::uint64_t data_seed(std::uint64_t master, int trial);
std::uint64_t model_seed(std::uint64_t master, int sweep_index, int trial);

Matrix load_covariate_source(const std::string& source);

// Runs every sweep value x trial x method, writing results.jsonl, table.csv,
// table_std.csv and manifest.json into `out`. Returns the records in file
// order.
std::vector<ResultRecord> run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out,
                                         const RunOptions& opts = {});

// Records of one trial (all rostered methods), in roster order. Dumps go
// under `out_dir` when requested in `opts`.
std::vector<ResultRecord> run_trial(const ExperimentConfig& cfg, int sweep_index, int trial,
                                    const Matrix* covariates, const RunOptions& opts,
                                    const std::filesystem::path& out_dir,
                                    std::map<std::string, double>* seconds = nullptr);

std::vector<ResultRecord> read_results(const std::filesystem::path& dir);

// Methods x (sweep value, metric) grid of trial means; the std grid goes to
// <stem>_std<ext> next to `out`. Cells without successful records are "NA".
void emit_table(const std::filesystem::path& dir, const std::filesystem::path& out);
void emit_table(const std::vector<ResultRecord>& records, const std::filesystem::path& out);

// One polyline per method of the mean metric ("eps_cate" or "eps_ate")
// against the sweep value.
std::string render_plot(const std::vector<ResultRecord>& records, const std::string& axis,
                        const std::string& metric = "eps_cate");
void emit_plot(const std::filesystem::path& dir, const std::string& axis, const std::filesystem::path& out,
               const std::string& metric = "eps_cate");

// Writes data.csv, truth.csv and manifest.json for trial 0 at the first
// sweep value.
void simulate_to(const ExperimentConfig& cfg, const std::filesystem::path& out);

}  // namespace ltce
