// Command-line front end: run experiments, list scenarios, validate
// configuration files.  Exit codes: 0 success, 2 config error,
// 3 runtime failure.

#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "chantrack/experiment.hpp"

namespace {

int cmd_list_scenarios() {
  for (chantrack::Scenario s : chantrack::all_scenarios())
    std::cout << chantrack::scenario_name(s) << "  -  "
              << chantrack::scenario_description(s) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"time-varying quantized massive-MIMO channel learning and "
               "tracking experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string scenario, out_dir, quant_infer;
  std::vector<double> snr;
  std::vector<int> bits;
  std::uint64_t seed = 0;
  int trials = -1, n = 0, m = 0, p = 0, p_t = -1, tracking_blocks = 0;
  bool use_true_params = false;

  CLI::App* run = app.add_subcommand("run", "run an experiment scenario");
  run->add_option("--config", config_path, "JSON config file");
  run->add_option("--scenario", scenario, "scenario name");
  run->add_option("--seed", seed, "master seed");
  run->add_option("--snr", snr, "SNR list in dB")->delimiter(',');
  run->add_option("--bits", bits, "quantization bits list")->delimiter(',');
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--trials", trials, "Monte-Carlo trials");
  run->add_option("--n", n, "number of antennas");
  run->add_option("--m", m, "learning blocks");
  run->add_option("--p", p, "pilots per learning block");
  run->add_option("--p-t", p_t, "tracking pilots (0 = auto)");
  run->add_option("--tracking-blocks", tracking_blocks, "tracking blocks");
  run->add_option("--quant-infer", quant_infer,
                  "likelihood for quantized runs: uniform|pdq");
  run->add_flag("--true-params", use_true_params,
                "track with the generating parameters, skip learning");

  CLI::App* list = app.add_subcommand("list-scenarios", "list scenario names");

  std::string validate_path;
  CLI::App* validate =
      app.add_subcommand("validate-config", "check a config file");
  validate->add_option("config", validate_path, "JSON config file")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (list->parsed()) return cmd_list_scenarios();

  if (validate->parsed()) {
    try {
      chantrack::load_config(validate_path);
      std::cout << "config ok\n";
      return 0;
    } catch (const std::exception& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return 2;
    }
  }

  chantrack::ExperimentConfig cfg;
  try {
    if (!config_path.empty()) cfg = chantrack::load_config(config_path);
    if (!scenario.empty()) cfg.scenario = chantrack::scenario_from_name(scenario);
    if (run->count("--seed")) cfg.seed = seed;
    if (!snr.empty()) cfg.snr_db = snr;
    if (!bits.empty()) cfg.bits = bits;
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (trials >= 0) cfg.num_trials = trials;
    if (n > 0) cfg.n = n;
    if (m > 0) cfg.m = m;
    if (p > 0) cfg.p = p;
    if (p_t >= 0) cfg.p_t = p_t;
    if (tracking_blocks > 0) cfg.tracking_blocks = tracking_blocks;
    if (!quant_infer.empty()) cfg.quant_infer = quant_infer;
    if (use_true_params) cfg.use_true_params = true;
    chantrack::validate_config(cfg);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  }

  try {
    const auto rows = chantrack::run_experiment(cfg);
    chantrack::emit_outputs(rows, cfg);
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
