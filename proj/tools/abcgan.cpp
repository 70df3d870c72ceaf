#include <iostream>

#include <CLI11.hpp>

#include "abcgan/cli/commands.hpp"

namespace cli = abcgan::cli;

int main(int argc, char** argv) {
  CLI::App app{"Train and evaluate ABC-GAN models on misspecified priors"};
  app.require_subcommand(1);

  cli::GenDataOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Write a synthetic Friedman3 dataset as CSV");
  gen_cmd->add_option("--dataset", gen.dataset, "Dataset to generate")->capture_default_str();
  gen_cmd->add_option("--n", gen.n, "Number of rows")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "Random seed")->capture_default_str();
  gen_cmd->add_option("--noise", gen.noise_std, "Standard deviation of the additive noise")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Output CSV path")->required();

  cli::RunOptions run;
  auto* run_cmd = app.add_subcommand("run", "Train and evaluate every repetition of one cell");
  run_cmd->add_option("--config", run.config, "Experiment config file");
  run_cmd->add_option("--cell", run.cell, "dataset,prior,variant,variance,bias")->required();
  run_cmd->add_option("--seed", run.seed, "Master seed (overrides the config)");
  run_cmd->add_option("--out", run.out, "Output directory (overrides the config)");

  cli::GridCmdOptions grid;
  auto* grid_cmd = app.add_subcommand("grid", "Run the full sweep and write tables");
  grid_cmd->add_option("--config", grid.config, "Experiment config file");
  grid_cmd->add_option("--out", grid.out, "Output directory (overrides the config)");
  grid_cmd->add_option("--workers", grid.workers, "Parallel workers (overrides the config)");
  grid_cmd->add_option("--seed", grid.seed, "Master seed (overrides the config)");
  grid_cmd->add_flag("--quiet", grid.quiet, "Suppress per-run progress");

  cli::ReportOptions report;
  auto* report_cmd = app.add_subcommand("report", "Rebuild tables and box-plot statistics from cached results");
  report_cmd->add_option("--in", report.in, "Directory holding cache/")->required();
  report_cmd->add_option("--out", report.out, "Where to write tables (defaults to --in)");
  report_cmd->add_option("--format", report.format, "md or csv")->capture_default_str();
  report_cmd->add_flag("--outlier-filter", report.outlier_filter, "Drop MAE values of 20 or more from box plots");
  report_cmd->add_flag("--exclude-diverged", report.exclude_diverged, "Leave diverged runs out of the means");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kOk : cli::kUsage;
  }

  if (*gen_cmd) return cli::cmd_gen_data(gen, std::cout, std::cerr);
  if (*run_cmd) return cli::cmd_run(run, std::cout, std::cerr);
  if (*grid_cmd) return cli::cmd_grid(grid, std::cout, std::cerr);
  return cli::cmd_report(report, std::cout, std::cerr);
}
