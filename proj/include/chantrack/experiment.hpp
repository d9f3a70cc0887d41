#ifndef CHANTRACK_EXPERIMENT_HPP
#define CHANTRACK_EXPERIMENT_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "chantrack/channel.hpp"
#include "chantrack/em.hpp"
#include "chantrack/quantizer.hpp"

namespace chantrack {

enum class Scenario {
  em_convergence,
  mse_vs_snr,
  mse_vs_bits,
  tracking_example,
  mse_vs_block,
};

std::string scenario_name(Scenario s);
Scenario scenario_from_name(const std::string& name);
std::vector<Scenario> all_scenarios();
std::string scenario_description(Scenario s);

struct ExperimentConfig {
  Scenario scenario = Scenario::em_convergence;
  int n = 32;
  int m = 16;
  int p = 8;    // pilots per learning block, default N/4
  int p_t = 0;  // tracking pilots, 0 = |O|
  std::vector<double> snr_db = {15.0, 30.0};
  std::vector<int> bits = {2, 4, 6};
  double velocity_kmh = 100.0;
  double carrier_hz = 2.0e9;
  double angle_spread_deg = 4.0;
  int support_width = 0;  // 0 = derived from the angle spread
  int num_trials = 50;
  std::uint64_t seed = 1;
  int tracking_blocks = 50;
  std::string quant_infer = "uniform";  // likelihood for quantized series
  double step_override = 0.0;           // 0 = 3-sigma loading
  double rho_override = -1.0;           // < 0 = table value
  bool use_true_params = false;         // skip learning before tracking
  std::string out_dir = "out";
  EmConfig em;
};

// JSON config file; unknown keys are rejected.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& json_text);
void validate_config(const ExperimentConfig& cfg);  // throws on violation

struct MetricRow {
  std::string scenario;
  std::string metric;
  std::string quantizer;  // "none", "2bit", ...
  double snr_db = 0.0;
  std::string x_name;
  double x_value = 0.0;
  int trials = 0;
  double value = 0.0;
  double value_db = 0.0;
  bool has_db = true;
};

// Orchestrates generation, learning, support detection and tracking
// for the configured scenario; deterministic per seed, trials run in a
// parallel pool with per-trial derived seeds.
std::vector<MetricRow> run_experiment(const ExperimentConfig& cfg);

// results.csv (fixed schema, timestamp comment line first) plus one
// plain-text plot-data file per scenario under cfg.out_dir.
void emit_outputs(const std::vector<MetricRow>& rows,
                  const ExperimentConfig& cfg);

std::string csv_header();
std::string format_row(const MetricRow& row);

// order-independent aggregate used for all trial summaries
double median(std::vector<double> values);

}  // namespace chantrack

#endif
