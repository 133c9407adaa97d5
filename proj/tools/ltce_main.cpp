#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ltce/experiment.hpp"
#include "ltce/runtime.hpp"

namespace {

struct ConfigArgs {
  std::string path;
  std::vector<std::string> overrides;
};

void add_config_args(CLI::App* cmd, ConfigArgs& args) {
  cmd->add_option("--config", args.path, "key = value experiment file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--set", args.overrides, "override a config key (key=value), repeatable");
}

}  // namespace

int main(int argc, char** argv) {
  ltce::tune_allocator();
  CLI::App app{"Long-term treatment effects under monotone missing outcomes"};
  app.set_version_flag("--version", std::string("ltce ") + LTCE_VERSION);
  app.require_subcommand(1);

  ConfigArgs sim_args;
  std::string sim_out;
  auto* simulate = app.add_subcommand("simulate", "write one synthetic panel with its ground truth");
  add_config_args(simulate, sim_args);
  simulate->add_option("--out", sim_out, "output directory")->required();

  ConfigArgs run_args;
  std::string run_out;
  ltce::RunOptions opts;
  auto* run = app.add_subcommand("run", "run the Monte Carlo experiment");
  add_config_args(run, run_args);
  run->add_option("--out", run_out, "output directory")->required();
  run->add_option("--jobs", opts.jobs, "worker threads")->check(CLI::PositiveNumber);
  run->add_flag("--dump-nuisance", opts.dump_nuisance, "write fitted propensity and selection scores");
  run->add_flag("--dump-model", opts.dump_model, "write trained balancing network parameters");

  std::string table_in, table_out;
  auto* table = app.add_subcommand("table", "methods x (sweep value, metric) table of trial means");
  table->add_option("--in", table_in, "results directory")->required();
  table->add_option("--out", table_out, "CSV path; the std grid goes next to it")->required();

  std::string plot_in, plot_axis, plot_out, plot_metric = "eps_cate";
  auto* plot = app.add_subcommand("plot", "SVG line plot of a sweep");
  plot->add_option("--in", plot_in, "results directory")->required();
  plot->add_option("--axis", plot_axis, "sweep axis (gamma, C, lambda, T)")->required();
  plot->add_option("--out", plot_out, "SVG path")->required();
  plot->add_option("--metric", plot_metric, "eps_cate or eps_ate")->check(CLI::IsMember({"eps_cate", "eps_ate"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate) {
      ltce::simulate_to(ltce::load_config(sim_args.path, sim_args.overrides), sim_out);
    } else if (*run) {
      const auto cfg = ltce::load_config(run_args.path, run_args.overrides);
      const auto records = ltce::run_experiment(cfg, run_out, opts);
      std::size_t failed = 0;
      for (const auto& r : records) failed += r.error.empty() ? 0 : 1;
      std::cerr << records.size() << " records written to " << run_out << "/results.jsonl";
      if (failed) std::cerr << " (" << failed << " failed)";
      std::cerr << '\n';
    } else if (*table) {
      ltce::emit_table(std::filesystem::path(table_in), std::filesystem::path(table_out));
    } else if (*plot) {
      ltce::emit_plot(plot_in, plot_axis, plot_out, plot_metric);
    }
  } catch (const ltce::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
