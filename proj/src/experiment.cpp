#include "chantrack/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "chantrack/io.hpp"
#include "chantrack/metrics.hpp"
#include "chantrack/support.hpp"
#include "chantrack/tracker.hpp"

namespace chantrack {

namespace {

using nlohmann::json;

int log_level() {
  static const int level = [] {
    const char* env = std::getenv("CHANTRACK_LOG");
    if (!env) return 1;
    const std::string v(env);
    if (v == "quiet" || v == "0") return 0;
    if (v == "debug" || v == "2") return 2;
    return 1;
  }();
  return level;
}

void log_info(const std::string& msg) {
  if (log_level() >= 1) std::cerr << "[chantrack] " << msg << '\n';
}

int thread_count(int jobs) {
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (const char* env = std::getenv("CHANTRACK_THREADS"))
    n = std::max(1, std::atoi(env));
  if (n < 1) n = 1;
  return std::min(n, jobs);
}

void parallel_for(int jobs, const std::function<void(int)>& fn) {
  const int workers = thread_count(jobs);
  if (workers <= 1) {
    for (int i = 0; i < jobs; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < jobs; i = next.fetch_add(1)) fn(i);
    });
  for (auto& t : pool) t.join();
}

struct QuantSeries {
  std::string label;  // "none", "2bit", ...
  bool quantized = false;
  int bits = 0;
};

QuantSeries series_none() { return {"none", false, 0}; }
QuantSeries series_bits(int bits) {
  return {std::to_string(bits) + "bit", true, bits};
}

// step size from the 3-sigma loading rule and the analytic pre-ADC
// signal power; entry_sq is the per-entry squared magnitude of the
// measurement matrix
double auto_step(int bits, double entry_sq, double signal_energy,
                 double noise_var, double override_step) {
  if (override_step > 0.0) return override_step;
  const double sigma_axis =
      std::sqrt(0.5 * (entry_sq * signal_energy + noise_var));
  return default_step(bits, sigma_axis);
}

struct TrialResult {
  std::vector<double> mse_alpha_db;   // per EM iteration, padded
  std::vector<double> mse_lambda_db;  // per EM iteration, padded
  bool support_ok = false;
  std::vector<double> mse_w_blocks;   // per tracking block, linear
  double mse_w_total_db = kDbFloor;
  // single-coefficient trajectory, tracking_example only
  std::vector<std::complex<double>> w_true_trace;
  std::vector<std::complex<double>> w_hat_trace;
};

struct TrialPlan {
  bool track = false;
  bool trajectory = false;
};

TrialResult run_trial(const ExperimentConfig& cfg, double snr_db,
                      const QuantSeries& series, std::uint64_t trial_seed,
                      const TrialPlan& plan) {
  Rng rng(trial_seed);
  const double pilot_power = 1.0;
  const double noise_var = std::pow(10.0, -snr_db / 10.0);

  const int width = cfg.support_width > 0
                        ? cfg.support_width
                        : support_width_from_angle_spread(
                              cfg.n, cfg.angle_spread_deg);
  SparseModelSpec sspec;
  sspec.n = cfg.n;
  sspec.support_width = width;
  sspec.alpha = velocity_to_alpha(cfg.velocity_kmh / 3.6, cfg.carrier_hz,
                                  calibrated_block_duration());
  const ModelParams truth = draw_sparse_params(sspec, rng);
  const VirtualChannelPath path = gen_model_matched_path(truth, cfg.m, rng);

  // expected signal energy, known to the simulation design
  const double e_h = width * 0.5 * (sspec.lambda_lo + sspec.lambda_hi);

  QuantizerSpec sim_spec = QuantizerSpec::none();
  QuantizerSpec infer_spec = QuantizerSpec::none();
  if (series.quantized) {
    const double entry_sq = pilot_power / (cfg.p * cfg.n);
    const double step = auto_step(series.bits, entry_sq, e_h, noise_var,
                                  cfg.step_override);
    sim_spec = QuantizerSpec::uniform(series.bits, step);
    if (cfg.quant_infer == "pdq") {
      const double rho = cfg.rho_override >= 0.0 ? cfg.rho_override
                                                 : default_rho(series.bits);
      infer_spec = QuantizerSpec::pdq(rho);
    } else {
      infer_spec = sim_spec;
    }
  }

  std::vector<VecC> y(cfg.m);
  std::vector<MatC> b(cfg.m);
  for (int m = 0; m < cfg.m; ++m) {
    const TrainingMatrix x = make_training_matrix(cfg.n, cfg.p, pilot_power, rng);
    b[m] = measurement_matrix(x);
    VecC q = b[m] * path.values.col(m);
    const double sd = std::sqrt(noise_var);
    for (Eigen::Index i = 0; i < q.size(); ++i) q(i) += sd * rng.cnormal();
    if (series.quantized && cfg.quant_infer == "pdq") {
      // inference treats codes as numeric symbols scaled by the step
      for (Eigen::Index i = 0; i < q.size(); ++i)
        q(i) = quantize(q(i), sim_spec, rng) * sim_spec.step;
    } else if (series.quantized) {
      for (Eigen::Index i = 0; i < q.size(); ++i)
        q(i) = quantize(q(i), sim_spec, rng);
    }
    y[m] = q;
  }

  TrialResult out;
  ModelParams learned = truth;
  std::vector<int> support = path.true_support;

  if (!cfg.use_true_params) {
    ModelParams init;
    init.alpha = cfg.em.alpha_max;
    init.lambda = VecD::Ones(cfg.n);
    const EmResult em =
        em_fit(y, b, infer_spec, noise_var, cfg.em, init, &truth);
    learned = em.params;
    for (const auto& tp : em.trace) {
      out.mse_alpha_db.push_back(tp.mse_alpha_db);
      out.mse_lambda_db.push_back(tp.mse_lambda_db);
    }
    while (static_cast<int>(out.mse_alpha_db.size()) < cfg.em.max_em_iters) {
      out.mse_alpha_db.push_back(out.mse_alpha_db.back());
      out.mse_lambda_db.push_back(out.mse_lambda_db.back());
    }
    const SupportSet det = kmeans_support(learned.lambda);
    support = det.indices;
    out.support_ok = (support == path.true_support);
  } else {
    out.support_ok = true;
  }

  if (!plan.track) return out;

  const int so = static_cast<int>(support.size());
  if (so == 0) throw std::runtime_error("trial: empty detected support");
  const int p_t = cfg.p_t > 0 ? cfg.p_t : so;
  if (p_t < so) throw std::runtime_error("trial: P_T below support size");

  VecD lambda_o(so);
  for (int i = 0; i < so; ++i) lambda_o(i) = learned.lambda(support[i]);

  QuantizerSpec track_sim = QuantizerSpec::none();
  QuantizerSpec track_infer = QuantizerSpec::none();
  if (series.quantized) {
    const double entry_sq = pilot_power / (static_cast<double>(p_t) * p_t);
    const double step = auto_step(series.bits, entry_sq, lambda_o.sum(),
                                  noise_var, cfg.step_override);
    track_sim = QuantizerSpec::uniform(series.bits, step);
    if (cfg.quant_infer == "pdq") {
      const double rho = cfg.rho_override >= 0.0 ? cfg.rho_override
                                                 : default_rho(series.bits);
      track_infer = QuantizerSpec::pdq(rho);
    } else {
      track_infer = track_sim;
    }
  }

  const ReducedTraining training =
      build_reduced_training(so, p_t, pilot_power, rng);
  TrackerConfig tcfg;
  tcfg.damping = cfg.em.damping;

  TrackState state = init_track_state(lambda_o);
  VecC h = draw_initial(truth, rng);
  out.mse_w_blocks.reserve(cfg.tracking_blocks);
  double acc = 0.0;
  int used = 0;
  for (int blk = 0; blk < cfg.tracking_blocks; ++blk) {
    if (blk > 0) h = ar_evolve(h, truth, rng);
    VecC w_true(so);
    for (int i = 0; i < so; ++i) w_true(i) = h(support[i]);
    VecC y_t =
        simulate_tracking_observation(w_true, training, noise_var, track_sim, rng);
    if (series.quantized && cfg.quant_infer == "pdq") y_t *= track_sim.step;
    const TrackOutput to = track_step(y_t, training, learned.alpha, lambda_o,
                                      state, track_infer, noise_var, tcfg);
    const double denom = w_true.squaredNorm();
    if (denom > 0.0) {
      const double e = (to.w_hat - w_true).squaredNorm() / denom;
      out.mse_w_blocks.push_back(e);
      acc += e;
      ++used;
    } else {
      out.mse_w_blocks.push_back(0.0);
    }
    if (plan.trajectory) {
      out.w_true_trace.push_back(w_true(0));
      out.w_hat_trace.push_back(to.w_hat(0));
    }
  }
  if (used > 0) out.mse_w_total_db = to_db(acc / used);
  return out;
}

// runs all trials of one (snr, series) cell; failed trials are logged
// and excluded
std::vector<TrialResult> run_cell(const ExperimentConfig& cfg, double snr_db,
                                  const QuantSeries& series,
                                  const TrialPlan& plan) {
  std::vector<std::optional<TrialResult>> slots(cfg.num_trials);
  std::atomic<int> failures{0};
  parallel_for(cfg.num_trials, [&](int t) {
    try {
      slots[t] = run_trial(cfg, snr_db, series, derive_seed(cfg.seed, t), plan);
    } catch (const std::exception& ex) {
      ++failures;
      if (log_level() >= 1)
        std::cerr << "[chantrack] trial " << t << " failed: " << ex.what()
                  << '\n';
    }
  });
  std::vector<TrialResult> kept;
  kept.reserve(cfg.num_trials);
  for (auto& s : slots)
    if (s) kept.push_back(std::move(*s));
  if (failures > 0)
    log_info(std::to_string(failures.load()) + " trial(s) excluded");
  return kept;
}

MetricRow make_row(const ExperimentConfig& cfg, const std::string& metric,
                   const QuantSeries& series, double snr_db,
                   const std::string& x_name, double x_value, int trials,
                   double value_db) {
  MetricRow row;
  row.scenario = scenario_name(cfg.scenario);
  row.metric = metric;
  row.quantizer = series.label;
  row.snr_db = snr_db;
  row.x_name = x_name;
  row.x_value = x_value;
  row.trials = trials;
  row.value = std::pow(10.0, value_db / 10.0);
  row.value_db = value_db;
  return row;
}

double median_of(const std::vector<TrialResult>& trials,
                 const std::function<double(const TrialResult&)>& get) {
  std::vector<double> vals;
  vals.reserve(trials.size());
  for (const auto& t : trials) vals.push_back(get(t));
  return median(std::move(vals));
}

void scenario_em_convergence(const ExperimentConfig& cfg,
                             std::vector<MetricRow>& rows) {
  const QuantSeries series = series_none();
  for (double snr : cfg.snr_db) {
    const auto trials = run_cell(cfg, snr, series, {});
    if (trials.empty()) continue;
    for (int it = 0; it < cfg.em.max_em_iters; ++it) {
      rows.push_back(make_row(
          cfg, "mse_alpha", series, snr, "iter", it + 1,
          static_cast<int>(trials.size()),
          median_of(trials, [it](const TrialResult& t) {
            return t.mse_alpha_db[it];
          })));
      rows.push_back(make_row(
          cfg, "mse_lambda", series, snr, "iter", it + 1,
          static_cast<int>(trials.size()),
          median_of(trials, [it](const TrialResult& t) {
            return t.mse_lambda_db[it];
          })));
    }
  }
}

void scenario_mse_vs_snr(const ExperimentConfig& cfg,
                         std::vector<MetricRow>& rows) {
  std::vector<QuantSeries> series{series_none()};
  for (int b : cfg.bits) series.push_back(series_bits(b));
  TrialPlan plan;
  plan.track = true;
  for (const auto& s : series)
    for (double snr : cfg.snr_db) {
      const auto trials = run_cell(cfg, snr, s, plan);
      if (trials.empty()) continue;
      const int n = static_cast<int>(trials.size());
      rows.push_back(make_row(cfg, "mse_alpha", s, snr, "snr_db", snr, n,
                              median_of(trials, [](const TrialResult& t) {
                                return t.mse_alpha_db.back();
                              })));
      rows.push_back(make_row(cfg, "mse_lambda", s, snr, "snr_db", snr, n,
                              median_of(trials, [](const TrialResult& t) {
                                return t.mse_lambda_db.back();
                              })));
      rows.push_back(make_row(cfg, "mse_w", s, snr, "snr_db", snr, n,
                              median_of(trials, [](const TrialResult& t) {
                                return t.mse_w_total_db;
                              })));
    }
}

void scenario_mse_vs_bits(const ExperimentConfig& cfg,
                          std::vector<MetricRow>& rows) {
  for (double snr : cfg.snr_db)
    for (int b : cfg.bits) {
      const QuantSeries s = series_bits(b);
      const auto trials = run_cell(cfg, snr, s, {});
      if (trials.empty()) continue;
      const int n = static_cast<int>(trials.size());
      rows.push_back(make_row(cfg, "mse_alpha", s, snr, "bits", b, n,
                              median_of(trials, [](const TrialResult& t) {
                                return t.mse_alpha_db.back();
                              })));
      rows.push_back(make_row(cfg, "mse_lambda", s, snr, "bits", b, n,
                              median_of(trials, [](const TrialResult& t) {
                                return t.mse_lambda_db.back();
                              })));
    }
}

void scenario_tracking_example(const ExperimentConfig& cfg,
                               std::vector<MetricRow>& rows) {
  std::vector<QuantSeries> series{series_none()};
  for (int b : cfg.bits) series.push_back(series_bits(b));
  TrialPlan plan;
  plan.track = true;
  plan.trajectory = true;
  ExperimentConfig one = cfg;
  one.num_trials = std::min(cfg.num_trials, 1);
  for (const auto& s : series)
    for (double snr : cfg.snr_db) {
      const auto trials = run_cell(one, snr, s, plan);
      if (trials.empty()) continue;
      const TrialResult& t = trials.front();
      for (std::size_t blk = 0; blk < t.w_true_trace.size(); ++blk) {
        const auto push = [&](const std::string& metric, double v) {
          MetricRow row = make_row(cfg, metric, s, snr, "block",
                                   static_cast<double>(blk + 1), 1, kDbFloor);
          row.value = v;
          row.has_db = false;
          rows.push_back(row);
        };
        push("w_true_re", t.w_true_trace[blk].real());
        push("w_true_im", t.w_true_trace[blk].imag());
        push("w_hat_re", t.w_hat_trace[blk].real());
        push("w_hat_im", t.w_hat_trace[blk].imag());
      }
    }
}

void scenario_mse_vs_block(const ExperimentConfig& cfg,
                           std::vector<MetricRow>& rows) {
  const QuantSeries series = series_none();
  TrialPlan plan;
  plan.track = true;
  for (double snr : cfg.snr_db) {
    const auto trials = run_cell(cfg, snr, series, plan);
    if (trials.empty()) continue;
    const int n = static_cast<int>(trials.size());
    for (int blk = 0; blk < cfg.tracking_blocks; ++blk) {
      const double med =
          median_of(trials, [blk](const TrialResult& t) {
            return t.mse_w_blocks[blk];
          });
      rows.push_back(make_row(cfg, "mse_w", series, snr, "block", blk + 1, n,
                              to_db(med)));
    }
  }
}

}  // namespace

std::string scenario_name(Scenario s) {
  switch (s) {
    case Scenario::em_convergence:
      return "em_convergence";
    case Scenario::mse_vs_snr:
      return "mse_vs_snr";
    case Scenario::mse_vs_bits:
      return "mse_vs_bits";
    case Scenario::tracking_example:
      return "tracking_example";
    case Scenario::mse_vs_block:
      return "mse_vs_block";
  }
  throw std::logic_error("scenario_name: bad scenario");
}

Scenario scenario_from_name(const std::string& name) {
  for (Scenario s : all_scenarios())
    if (scenario_name(s) == name) return s;
  throw std::invalid_argument("unknown scenario: " + name);
}

std::vector<Scenario> all_scenarios() {
  return {Scenario::em_convergence, Scenario::mse_vs_snr, Scenario::mse_vs_bits,
          Scenario::tracking_example, Scenario::mse_vs_block};
}

std::string scenario_description(Scenario s) {
  switch (s) {
    case Scenario::em_convergence:
      return "parameter-learning MSE versus EM iteration";
    case Scenario::mse_vs_snr:
      return "learning and tracking MSE versus SNR per quantizer";
    case Scenario::mse_vs_bits:
      return "learning MSE versus quantization bits";
    case Scenario::tracking_example:
      return "single-run tracked versus true coefficient trajectory";
    case Scenario::mse_vs_block:
      return "tracking MSE versus block index";
  }
  return {};
}

ExperimentConfig parse_config(const std::string& json_text) {
  json j = json::parse(json_text);
  ExperimentConfig cfg;
  const auto take = [&](const char* key, auto& field) {
    if (j.contains(key)) {
      field = j.at(key).get<std::decay_t<decltype(field)>>();
      j.erase(key);
    }
  };
  std::string scenario = scenario_name(cfg.scenario);
  take("scenario", scenario);
  cfg.scenario = scenario_from_name(scenario);
  take("n", cfg.n);
  take("m", cfg.m);
  take("p", cfg.p);
  take("p_t", cfg.p_t);
  take("snr_db", cfg.snr_db);
  take("bits", cfg.bits);
  take("velocity_kmh", cfg.velocity_kmh);
  take("carrier_hz", cfg.carrier_hz);
  take("angle_spread_deg", cfg.angle_spread_deg);
  take("support_width", cfg.support_width);
  take("num_trials", cfg.num_trials);
  take("seed", cfg.seed);
  take("tracking_blocks", cfg.tracking_blocks);
  take("quant_infer", cfg.quant_infer);
  take("step_override", cfg.step_override);
  take("rho_override", cfg.rho_override);
  take("use_true_params", cfg.use_true_params);
  take("out_dir", cfg.out_dir);
  take("em_iters", cfg.em.max_em_iters);
  take("k_max", cfg.em.k_max);
  if (!j.empty())
    throw std::invalid_argument("unknown config key: " + j.begin().key());
  validate_config(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

void validate_config(const ExperimentConfig& cfg) {
  if (cfg.n < 2) throw std::invalid_argument("config: n must be >= 2");
  if (cfg.m < 1) throw std::invalid_argument("config: m must be >= 1");
  if (cfg.p < 1 || cfg.p > cfg.n)
    throw std::invalid_argument("config: need 1 <= p <= n");
  if (cfg.snr_db.empty())
    throw std::invalid_argument("config: snr_db list is empty");
  for (int b : cfg.bits)
    if (b < 1 || b > 16)
      throw std::invalid_argument("config: bits entries must be in 1..16");
  if (cfg.num_trials < 0)
    throw std::invalid_argument("config: num_trials must be >= 0");
  if (cfg.tracking_blocks < 1)
    throw std::invalid_argument("config: tracking_blocks must be >= 1");
  if (cfg.support_width < 0 || cfg.support_width > cfg.n)
    throw std::invalid_argument("config: support_width out of range");
  if (cfg.velocity_kmh < 0.0)
    throw std::invalid_argument("config: velocity must be >= 0");
  if (cfg.quant_infer != "uniform" && cfg.quant_infer != "pdq")
    throw std::invalid_argument("config: quant_infer must be uniform or pdq");
  if (cfg.angle_spread_deg <= 0.0 || cfg.angle_spread_deg > 180.0)
    throw std::invalid_argument("config: angle_spread_deg out of (0, 180]");
}

double median(std::vector<double> values) {
  if (values.empty())
    throw std::invalid_argument("median: empty input");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::vector<MetricRow> run_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  std::vector<MetricRow> rows;
  if (cfg.num_trials == 0) return rows;
  switch (cfg.scenario) {
    case Scenario::em_convergence:
      scenario_em_convergence(cfg, rows);
      break;
    case Scenario::mse_vs_snr:
      scenario_mse_vs_snr(cfg, rows);
      break;
    case Scenario::mse_vs_bits:
      scenario_mse_vs_bits(cfg, rows);
      break;
    case Scenario::tracking_example:
      scenario_tracking_example(cfg, rows);
      break;
    case Scenario::mse_vs_block:
      scenario_mse_vs_block(cfg, rows);
      break;
  }
  return rows;
}

std::string csv_header() {
  return "scenario,metric,quantizer,snr_db,x_name,x_value,trials,value,"
         "value_db";
}

std::string format_row(const MetricRow& row) {
  std::ostringstream oss;
  oss << row.scenario << ',' << row.metric << ',' << row.quantizer << ','
      << format_double(row.snr_db) << ',' << row.x_name << ','
      << format_double(row.x_value) << ',' << row.trials << ','
      << format_double(row.value) << ',';
  if (row.has_db) oss << format_double(row.value_db);
  return oss.str();
}

void emit_outputs(const std::vector<MetricRow>& rows,
                  const ExperimentConfig& cfg) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);

  const fs::path csv_path = fs::path(cfg.out_dir) / "results.csv";
  {
    std::ofstream f(csv_path);
    if (!f)
      throw std::runtime_error("emit_outputs: cannot write " +
                               csv_path.string());
    const auto now = std::chrono::system_clock::now();
    f << "# timestamp: "
      << std::chrono::duration_cast<std::chrono::seconds>(
             now.time_since_epoch())
             .count()
      << '\n';
    f << csv_header() << '\n';
    for (const auto& row : rows) f << format_row(row) << '\n';
  }

  // plot-data file: one column block per series, rows keyed by x
  const fs::path dat_path =
      fs::path(cfg.out_dir) / (scenario_name(cfg.scenario) + ".dat");
  std::map<std::string, std::map<double, double>> series;
  std::string x_name = "x";
  for (const auto& row : rows) {
    std::ostringstream key;
    key << row.metric << ':' << row.quantizer << ":snr" << row.snr_db;
    series[key.str()][row.x_value] = row.has_db ? row.value_db : row.value;
    x_name = row.x_name;
  }
  std::ofstream f(dat_path);
  if (!f)
    throw std::runtime_error("emit_outputs: cannot write " + dat_path.string());
  f << "# " << x_name;
  for (const auto& [name, _] : series) f << ' ' << name;
  f << '\n';
  std::map<double, std::map<std::string, double>> by_x;
  for (const auto& [name, points] : series)
    for (const auto& [x, v] : points) by_x[x][name] = v;
  for (const auto& [x, vals] : by_x) {
    f << format_double(x);
    for (const auto& [name, _] : series) {
      auto it = vals.find(name);
      f << ' ' << (it == vals.end() ? "nan" : format_double(it->second));
    }
    f << '\n';
  }
  log_info("wrote " + csv_path.string() + " and " + dat_path.string());
}

}  // namespace chantrack
