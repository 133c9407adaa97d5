#include "ltce/experiment.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <fstream>
#include <mutex>
#include <thread>

#include <json.hpp>

namespace ltce {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

json optional_number(const std::optional<double>& v) {
  if (!v || !std::isfinite(*v)) return nullptr;
  return *v;
}

std::optional<double> read_optional(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<double>();
}

bool needs_nuisances(const std::string& method) {
  return method == "naive-ipw" || method == "proposed-ipw" || method == "seqmsm";
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void dump_nuisances(const NuisanceScores& nuis, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(17);
  out << "e1";
  for (int t = 1; t <= nuis.selection.stages(); ++t) out << ",r" << t;
  out << '\n';
  for (Index i = 0; i < nuis.propensity.size(); ++i) {
    out << nuis.propensity(i);
    for (const auto& col : nuis.selection.product) {
      out << ',';
      if (col[static_cast<std::size_t>(i)]) out << *col[static_cast<std::size_t>(i)];
    }
    out << '\n';
  }
}

std::string job_stem(int sweep_index, int trial) {
  return "s" + std::to_string(sweep_index) + "_t" + std::to_string(trial);
}

}  // namespace

std::string ResultRecord::to_json() const {
  json j;
  j["sweep_axis"] = sweep_axis;
  j["sweep_value"] = sweep_value;
  j["trial"] = trial;
  j["method"] = method;
  j["tau_hat"] = optional_number(tau_hat);
  j["eps_ate"] = optional_number(eps_ate);
  j["eps_cate"] = optional_number(eps_cate);
  json diag = json::object();
  for (const auto& [k, v] : diagnostics) diag[k] = std::isfinite(v) ? json(v) : json(nullptr);
  j["diagnostics"] = diag;
  if (!error.empty()) j["error"] = error;
  return j.dump();
}

ResultRecord ResultRecord::from_json(const std::string& line) {
  const json j = json::parse(line);
  ResultRecord r;
  r.sweep_axis = j.at("sweep_axis").get<std::string>();
  r.sweep_value = j.at("sweep_value").get<double>();
  r.trial = j.at("trial").get<int>();
  r.method = j.at("method").get<std::string>();
  r.tau_hat = read_optional(j, "tau_hat");
  r.eps_ate = read_optional(j, "eps_ate");
  r.eps_cate = read_optional(j, "eps_cate");
  if (j.contains("diagnostics")) {
    for (const auto& [k, v] : j["diagnostics"].items()) {
      if (!v.is_null()) r.diagnostics[k] = v.get<double>();
    }
  }
  if (j.contains("error")) r.error = j["error"].get<std::string>();
  return r;
}

std::uint64_t data_seed(std::uint64_t master, int trial) {
  return derive_seed(master, {seed_tag("data"), static_cast<std::uint64_t>(trial)});
}

std::uint64_t model_seed(std::uint64_t master, int sweep_index, int trial) {
  return derive_seed(master, {seed_tag("model"), static_cast<std::uint64_t>(sweep_index),
                              static_cast<std::uint64_t>(trial)});
}

Matrix load_covariate_source(const std::string& source) {
  if (source.rfind("csv:", 0) != 0) throw ConfigError("not a csv covariate source: " + source);
  return load_covariates_csv(source.substr(4));
}

std::vector<ResultRecord> run_trial(const ExperimentConfig& cfg, int sweep_index, int trial,
                                    const Matrix* covariates, const RunOptions& opts, const fs::path& out_dir,
                                    std::map<std::string, double>* seconds) {
  using clock = std::chrono::steady_clock;
  const double value = cfg.grid().at(static_cast<std::size_t>(sweep_index));
  DgpConfig dgp = cfg.dgp_at(value);
  dgp.seed = data_seed(cfg.seed, trial);
  EstimatorConfig est = cfg.estimators_at(value);
  est.seed = model_seed(cfg.seed, sweep_index, trial);
  est.dump_model = opts.dump_model;

  auto blank = [&](const std::string& method) {
    ResultRecord r;
    r.sweep_axis = to_string(cfg.axis);
    r.sweep_value = value;
    r.trial = trial;
    r.method = method;
    return r;
  };

  std::vector<ResultRecord> out;
  std::optional<SyntheticSample> sample;
  std::string data_error;
  try {
    sample = simulate(dgp, covariates);
  } catch (const std::exception& e) {
    data_error = std::string("data generation failed: ") + e.what();
  }
  if (!sample) {
    for (const auto& m : cfg.methods) {
      out.push_back(blank(m));
      out.back().error = data_error;
    }
    return out;
  }

  const bool any_needs = std::any_of(cfg.methods.begin(), cfg.methods.end(), needs_nuisances);
  std::optional<NuisanceScores> nuis;
  std::string nuis_error;
  if (any_needs) {
    try {
      const auto t0 = clock::now();
      if (cfg.oracle_nuisances) {
        nuis = known_nuisances(sample->propensity, *sample->selection);
      } else {
        nuis = estimate_nuisances(sample->data, est.nuisance);
      }
      if (seconds) (*seconds)["nuisances"] += std::chrono::duration<double>(clock::now() - t0).count();
    } catch (const std::exception& e) {
      nuis_error = std::string("nuisance fit failed: ") + e.what();
    }
    // I/O failures are not quarantined.
    if (nuis && opts.dump_nuisance) {
      dump_nuisances(*nuis, out_dir / "nuisance" / (job_stem(sweep_index, trial) + ".csv"));
    }
  }

  const TrueEffects truth = true_effects(sample->truth);
  const Vector true_diff = sample->truth.long_term.col(1) - sample->truth.long_term.col(0);
  for (const auto& m : cfg.methods) {
    ResultRecord r = blank(m);
    if (needs_nuisances(m) && !nuis) {
      r.error = nuis_error;
      out.push_back(std::move(r));
      continue;
    }
    const auto t0 = clock::now();
    std::string model_json;
    try {
      EffectEstimate e = estimate(m, sample->data, nuis ? &*nuis : nullptr, est);
      r.tau_hat = e.tau_hat;
      r.eps_ate = eps_ate(e.cate_hat, true_diff);
      r.eps_cate = eps_cate(e.cate_hat, truth.tau_x);
      r.diagnostics = std::move(e.diagnostics);
      model_json = std::move(e.model_json);
    } catch (const std::exception& e) {
      r.error = e.what();
    }
    if (opts.dump_model && !model_json.empty()) {
      write_file(out_dir / "models" / (job_stem(sweep_index, trial) + "_" + m + ".json"), model_json);
    }
    if (seconds) (*seconds)[m] += std::chrono::duration<double>(clock::now() - t0).count();
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<ResultRecord> run_experiment(const ExperimentConfig& cfg, const fs::path& out, const RunOptions& opts) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  fs::create_directories(out);
  if (opts.dump_nuisance) fs::create_directories(out / "nuisance");
  if (opts.dump_model) fs::create_directories(out / "models");

  std::optional<Matrix> covariates;
  if (cfg.covariates != "synthetic") covariates = load_covariate_source(cfg.covariates);

  const auto grid = cfg.grid();
  const int total = static_cast<int>(grid.size()) * cfg.trials;
  std::vector<std::optional<std::vector<ResultRecord>>> slots(static_cast<std::size_t>(total));
  std::vector<std::map<std::string, double>> seconds(static_cast<std::size_t>(total));
  std::mutex mu;
  std::condition_variable ready;
  std::atomic<int> next{0};

  std::vector<std::exception_ptr> failures(static_cast<std::size_t>(total));

  auto run_job = [&](int job) {
    std::vector<ResultRecord> records;
    std::exception_ptr failure;
    try {
      records = run_trial(cfg, job / cfg.trials, job % cfg.trials, covariates ? &*covariates : nullptr, opts, out,
                          &seconds[static_cast<std::size_t>(job)]);
    } catch (...) {
      failure = std::current_exception();
    }
    {
      std::lock_guard<std::mutex> lock(mu);
      failures[static_cast<std::size_t>(job)] = failure;
      slots[static_cast<std::size_t>(job)] = std::move(records);
    }
    ready.notify_all();
  };

  const int jobs = std::max(1, std::min(opts.jobs, total));
  std::vector<std::thread> pool;
  if (jobs > 1) {
    for (int k = 0; k < jobs; ++k) {
      pool.emplace_back([&] {
        for (int job = next++; job < total; job = next++) run_job(job);
      });
    }
  }
  auto stop_pool = [&] {
    next = total;
    for (auto& t : pool) t.join();
    pool.clear();
  };

  std::ofstream jsonl(out / "results.jsonl", std::ios::binary);
  if (!jsonl) {
    stop_pool();
    throw std::runtime_error("cannot write " + (out / "results.jsonl").string());
  }
  std::vector<ResultRecord> all;
  for (int job = 0; job < total; ++job) {
    if (jobs == 1) run_job(job);
    std::vector<ResultRecord> records;
    std::exception_ptr failure;
    {
      std::unique_lock<std::mutex> lock(mu);
      ready.wait(lock, [&] { return slots[static_cast<std::size_t>(job)].has_value(); });
      records = std::move(*slots[static_cast<std::size_t>(job)]);
      slots[static_cast<std::size_t>(job)].reset();
      failure = failures[static_cast<std::size_t>(job)];
    }
    if (failure) {
      stop_pool();
      std::rethrow_exception(failure);
    }
    for (auto& r : records) {
      jsonl << r.to_json() << '\n';
      all.push_back(std::move(r));
    }
    jsonl.flush();
    if (!jsonl) {
      stop_pool();
      throw std::runtime_error("write failed: results.jsonl");
    }
  }
  stop_pool();
  jsonl.close();

  emit_table(all, out / "table.csv");

  json manifest;
  manifest["tool"] = "ltce";
  manifest["version"] = LTCE_VERSION;
  manifest["config"] = cfg.resolved;
  manifest["trial_resampling"] = "coefficients, covariates, treatments, outcomes and missingness per trial";
  manifest["jobs"] = jobs;
  manifest["records"] = all.size();
  json seeds = json::array();
  std::map<std::string, double> method_seconds;
  for (int job = 0; job < total; ++job) {
    const int si = job / cfg.trials;
    const int trial = job % cfg.trials;
    seeds.push_back({{"sweep_index", si},
                     {"sweep_value", grid[static_cast<std::size_t>(si)]},
                     {"trial", trial},
                     {"data_seed", data_seed(cfg.seed, trial)},
                     {"model_seed", model_seed(cfg.seed, si, trial)}});
    for (const auto& [m, s] : seconds[static_cast<std::size_t>(job)]) method_seconds[m] += s;
  }
  manifest["seeds"] = seeds;
  manifest["seconds"] = method_seconds;
  manifest["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_file(out / "manifest.json", manifest.dump(2) + "\n");
  return all;
}

std::vector<ResultRecord> read_results(const fs::path& dir) {
  const fs::path path = fs::is_directory(dir) ? dir / "results.jsonl" : dir;
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<ResultRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(ResultRecord::from_json(line));
  }
  return out;
}

void simulate_to(const ExperimentConfig& cfg, const fs::path& out) {
  cfg.validate();
  fs::create_directories(out);
  std::optional<Matrix> covariates;
  if (cfg.covariates != "synthetic") covariates = load_covariate_source(cfg.covariates);
  DgpConfig dgp = cfg.dgp_at(cfg.grid().front());
  dgp.seed = data_seed(cfg.seed, 0);
  const SyntheticSample s = simulate(dgp, covariates ? &*covariates : nullptr);
  write_csv(s.data, (out / "data.csv").string());
  write_ground_truth_csv(s.truth, (out / "truth.csv").string());
  json manifest;
  manifest["tool"] = "ltce";
  manifest["version"] = LTCE_VERSION;
  manifest["config"] = cfg.resolved;
  manifest["data_seed"] = dgp.seed;
  manifest["n"] = s.data.size();
  manifest["observed_per_stage"] = json::array();
  for (int t = 1; t <= s.data.stages(); ++t) {
    manifest["observed_per_stage"].push_back(observed_subset(s.data, t).size());
  }
  manifest["tau"] = s.truth.tau;
  write_file(out / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace ltce
