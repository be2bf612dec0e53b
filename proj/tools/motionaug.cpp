// Command-line front end: synth, validate, augment, sweep, report.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "motionaug/commands.hpp"

int main(int argc, char** argv) {
  using namespace motionaug;

  CLI::App app{"Motion-signal augmentation and few-shot user identification toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::optional<std::string> config;
  app.add_option("--seed", seed, "Base random seed")->configurable(false);
  app.add_option("--threads", threads, "Worker threads for sweep")->check(CLI::PositiveNumber);
  app.add_option("--config", config, "Sweep configuration file (JSON)");

  // synth
  SynthConfig synth;
  std::string synth_out;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic windowed-sample dataset");
  synth_cmd->add_option("-o,--output", synth_out, "Output file")->required();
  synth_cmd->add_option("--users", synth.n_users, "Number of users")->capture_default_str();
  synth_cmd->add_option("--samples", synth.samples_per_user, "Samples per user")->capture_default_str();
  synth_cmd->add_option("--length", synth.length, "Samples per window")->capture_default_str();
  synth_cmd->add_option("--channels", synth.n_channels, "Channels per window")->capture_default_str();
  synth_cmd->add_option("--amplitude", synth.amplitude, "Signature amplitude")->capture_default_str();
  synth_cmd->add_option("--jitter", synth.jitter_std, "Per-sample jitter std")->capture_default_str();

  // validate
  std::string validate_path;
  auto* validate_cmd = app.add_subcommand("validate", "Check a dataset or embedding file");
  validate_cmd->add_option("file", validate_path, "File to validate")->required();

  // augment
  cli::AugmentArgs aug;
  std::string method = "intensity";
  double sigma = 0.0, mu = 0.0, f_t = 1.0, f_i = 1.0;
  std::string plot;
  auto* augment_cmd = app.add_subcommand("augment", "Augment every sample of a dataset file");
  augment_cmd->add_option("-i,--input", aug.input, "Input dataset")->required();
  augment_cmd->add_option("-o,--output", aug.output, "Output dataset")->required();
  augment_cmd->add_option("--method", method, "noise | temporal | intensity | warp-lr | warp-rl")
      ->check(CLI::IsMember({"noise", "temporal", "intensity", "warp-lr", "warp-rl"}))
      ->capture_default_str();
  augment_cmd->add_option("--sigma", sigma, "Noise standard deviation");
  augment_cmd->add_option("--mu", mu, "Noise mean");
  augment_cmd->add_option("--f-t", f_t, "Temporal scaling factor");
  augment_cmd->add_option("--f-i", f_i, "Intensity scaling factor");
  augment_cmd->add_option("--plot-data", plot, "Also write paired original/augmented series here");

  // sweep
  cli::SweepArgs sweep;
  std::string sweep_config;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run a few-shot identification sweep");
  sweep_cmd->add_option("config_file", sweep_config, "Configuration file (or use --config)");
  sweep_cmd->add_option("-o,--output", sweep.output_dir, "Report directory")->required();

  // report
  std::optional<std::string> cells, report_out, check;
  auto* report_cmd = app.add_subcommand("report", "Rebuild tables from a cells dump or check table markers");
  report_cmd->add_option("--cells", cells, "cells.csv written by sweep");
  report_cmd->add_option("-o,--output", report_out, "Directory for regenerated tables");
  report_cmd->add_option("--check", check, "Table CSV whose markers should be verified");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kOk : cli::kUsageError;
  }

  return cli::guarded(std::cerr, [&]() -> int {
    if (*synth_cmd) {
      synth.seed = seed.value_or(1);
      return cli::cmd_synth(synth, synth_out, std::cout);
    }
    if (*validate_cmd) return cli::cmd_validate(validate_path, std::cout);
    if (*augment_cmd) {
      const auto m = parse_method(method);
      aug.spec = {*m, mu, sigma, f_t, f_i};
      aug.seed = seed.value_or(0);
      if (!plot.empty()) aug.plot_data = plot;
      return cli::cmd_augment(aug, std::cout);
    }
    if (*sweep_cmd) {
      sweep.config = !sweep_config.empty() ? sweep_config : config.value_or("");
      if (sweep.config.empty()) throw ConfigError("sweep needs a configuration file");
      sweep.seed = seed;
      sweep.threads = threads;
      return cli::cmd_sweep(sweep, std::cout);
    }
    return cli::cmd_report(cells, report_out, check, std::cout, std::cerr);
  });
}
