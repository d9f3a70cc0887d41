#include "chantrack/em.hpp"

#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "chantrack/metrics.hpp"

namespace chantrack {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

GaussianMessage combine(const GaussianMessage& a, const GaussianMessage& b) {
  if (a.variance == 0.0 && b.variance == 0.0)
    throw std::invalid_argument("combine: both messages degenerate");
  if (a.variance == 0.0) return a;
  if (b.variance == 0.0) return b;
  const double wa = (a.variance == kInf) ? 0.0 : 1.0 / a.variance;
  const double wb = (b.variance == kInf) ? 0.0 : 1.0 / b.variance;
  const double w = wa + wb;
  GaussianMessage out;
  if (w == 0.0) return out;  // both uninformative
  out.variance = 1.0 / w;
  out.mean = (a.mean * wa + b.mean * wb) / w;
  return out;
}

GaussianMessage combine_time_prior(const GaussianMessage& fwd,
                                   const GaussianMessage& bwd) {
  return combine(fwd, bwd);
}

BlockMessages BlockMessages::init(int n, int m) {
  BlockMessages msgs;
  msgs.fwd_mean = MatC::Zero(n, m);
  msgs.bwd_mean = MatC::Zero(n, m);
  msgs.meas_mean = MatC::Zero(n, m);
  msgs.fwd_var = MatD::Constant(n, m, kInf);
  msgs.bwd_var = MatD::Constant(n, m, kInf);
  msgs.meas_var = MatD::Constant(n, m, kInf);
  return msgs;
}

void forward_update(BlockMessages& msgs, const ModelParams& params, int m) {
  const int n = static_cast<int>(msgs.fwd_mean.rows());
  const double a = params.alpha;
  if (m == 0) {
    for (int i = 0; i < n; ++i) {
      msgs.fwd_mean(i, 0) = 0.0;
      msgs.fwd_var(i, 0) = params.lambda(i);
    }
    return;
  }
  for (int i = 0; i < n; ++i) {
    const GaussianMessage prev_fwd{msgs.fwd_mean(i, m - 1),
                                   msgs.fwd_var(i, m - 1)};
    const GaussianMessage prev_meas{msgs.meas_mean(i, m - 1),
                                    msgs.meas_var(i, m - 1)};
    const GaussianMessage comb = combine(prev_fwd, prev_meas);
    msgs.fwd_mean(i, m) = a * comb.mean;
    const double var = a * a * comb.variance + (1.0 - a * a) * params.lambda(i);
    if (var < 0.0) throw std::runtime_error("forward_update: negative variance");
    msgs.fwd_var(i, m) = var;
  }
}

void backward_update(BlockMessages& msgs, const ModelParams& params, int m) {
  const int n = static_cast<int>(msgs.bwd_mean.rows());
  const int num_blocks = static_cast<int>(msgs.bwd_mean.cols());
  if (m == num_blocks - 1) {
    for (int i = 0; i < n; ++i) {
      msgs.bwd_mean(i, m) = 0.0;
      msgs.bwd_var(i, m) = kInf;
    }
    return;
  }
  const double a = params.alpha;
  if (a == 0.0)
    throw std::domain_error("backward_update: alpha == 0 divides the message");
  for (int i = 0; i < n; ++i) {
    const GaussianMessage next_bwd{msgs.bwd_mean(i, m + 1),
                                   msgs.bwd_var(i, m + 1)};
    const GaussianMessage next_meas{msgs.meas_mean(i, m + 1),
                                    msgs.meas_var(i, m + 1)};
    const GaussianMessage comb = combine(next_bwd, next_meas);
    msgs.bwd_mean(i, m) = comb.mean / a;
    const double var =
        (comb.variance + (1.0 - a * a) * params.lambda(i)) / (a * a);
    if (var < 0.0) throw std::runtime_error("backward_update: negative variance");
    msgs.bwd_var(i, m) = var;
  }
}

VecD PosteriorStats::theta_diag() const {
  VecD d(tau.size());
  for (Eigen::Index i = 0; i < tau.size(); ++i)
    d(i) = tau(i) + std::norm(h_hat(i));
  return d;
}

VecC compute_pi(const VecC& h_prev, const VecC& h_cur, const VecD& tau_prev,
                double alpha_prev) {
  VecC pi(h_prev.size());
  for (Eigen::Index i = 0; i < h_prev.size(); ++i)
    pi(i) = h_prev(i) * std::conj(h_cur(i)) + alpha_prev * tau_prev(i);
  return pi;
}

EStepResult e_step(const std::vector<VecC>& y, const std::vector<MatC>& b,
                   const ModelParams& params, const QuantizerSpec& spec,
                   double noise_var, const EmConfig& config,
                   const EStepResult* warm) {
  const int num_blocks = static_cast<int>(y.size());
  if (num_blocks == 0 || b.size() != y.size())
    throw std::invalid_argument("e_step: inconsistent block data");
  const int n = static_cast<int>(b[0].cols());

  EStepResult res;
  res.messages = BlockMessages::init(n, num_blocks);

  // elementwise |B|^2, reused every round
  std::vector<MatD> s_abs2(num_blocks);
  for (int m = 0; m < num_blocks; ++m)
    s_abs2[m] = b[m].cwiseAbs2();

  res.gamp_states.reserve(num_blocks);
  for (int m = 0; m < num_blocks; ++m) {
    if (warm && static_cast<int>(warm->gamp_states.size()) == num_blocks) {
      GampState st = warm->gamp_states[m];
      // restart above the previous posterior variance
      for (Eigen::Index i = 0; i < st.nu_x.size(); ++i)
        st.nu_x(i) = std::max(2.0 * st.nu_x(i), 1e-12);
      res.gamp_states.push_back(std::move(st));
    } else {
      VecD nu0(n);
      for (int i = 0; i < n; ++i) nu0(i) = std::max(params.lambda(i), 1e-12);
      res.gamp_states.push_back(GampState::init(VecC::Zero(n), nu0));
    }
  }

  std::vector<ScalarPrior> priors(n);
  for (int k = 0; k < config.k_max; ++k) {
    for (int m = 0; m < num_blocks; ++m)
      forward_update(res.messages, params, m);

    double max_delta = 0.0;
    for (int m = 0; m < num_blocks; ++m) {
      for (int i = 0; i < n; ++i) {
        const GaussianMessage fwd{res.messages.fwd_mean(i, m),
                                  res.messages.fwd_var(i, m)};
        const GaussianMessage bwd{res.messages.bwd_mean(i, m),
                                  res.messages.bwd_var(i, m)};
        const GaussianMessage prior = combine_time_prior(fwd, bwd);
        priors[i] = {prior.mean, prior.variance};
      }
      GampState& st = res.gamp_states[m];
      const VecC before = st.x_hat;
      gamp_block_update(b[m], s_abs2[m], y[m], priors, spec, noise_var, st,
                        config.damping);
      for (int i = 0; i < n; ++i) {
        res.messages.meas_mean(i, m) = st.r(i);
        res.messages.meas_var(i, m) = st.nu_r(i);
      }
      const double denom = std::max(st.x_hat.norm(), 1e-12);
      max_delta = std::max(max_delta, (st.x_hat - before).norm() / denom);
    }

    if (params.alpha > 0.0) {
      for (int m = num_blocks - 1; m >= 0; --m)
        backward_update(res.messages, params, m);
    }
    // alpha == 0 keeps backward messages uninformative: the transition
    // factor carries no information about the past in that limit

    if (max_delta < config.tol_estep) break;
  }

  res.blocks.resize(num_blocks);
  for (int m = 0; m < num_blocks; ++m) {
    PosteriorStats& ps = res.blocks[m];
    ps.h_hat = res.gamp_states[m].x_hat;
    ps.tau = res.gamp_states[m].nu_x;
    if (m > 0)
      ps.pi_diag = compute_pi(res.blocks[m - 1].h_hat, ps.h_hat,
                              res.blocks[m - 1].tau, params.alpha);
  }
  return res;
}

VecD m_step_lambda(const std::vector<PosteriorStats>& stats, double alpha,
                   double lambda_floor) {
  if (stats.empty()) throw std::invalid_argument("m_step_lambda: no stats");
  if (alpha < 0.0 || alpha >= 1.0)
    throw std::domain_error("m_step_lambda: alpha outside [0, 1)");
  const int num_blocks = static_cast<int>(stats.size());
  const int n = static_cast<int>(stats[0].h_hat.size());
  const double a2 = alpha * alpha;
  const double inv = 1.0 / (1.0 - a2);

  VecD lambda = stats[0].theta_diag();
  for (int m = 1; m < num_blocks; ++m) {
    const VecD theta_prev = stats[m - 1].theta_diag();
    const VecD theta_cur = stats[m].theta_diag();
    for (int i = 0; i < n; ++i) {
      const double re_pi = stats[m].pi_diag(i).real();
      lambda(i) +=
          inv * (-2.0 * alpha * re_pi + a2 * theta_prev(i) + theta_cur(i));
    }
  }
  lambda /= static_cast<double>(num_blocks);
  for (int i = 0; i < n; ++i) lambda(i) = std::max(lambda(i), lambda_floor);
  return lambda;
}

namespace {

// real roots of c3 x^3 + c2 x^2 + c1 x + c0, c3 != 0
std::vector<double> cubic_real_roots(double c3, double c2, double c1,
                                     double c0) {
  const double a = c2 / c3, b = c1 / c3, c = c0 / c3;
  // depressed form t^3 + p t + q with x = t - a/3
  const double p = b - a * a / 3.0;
  const double q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
  const double shift = -a / 3.0;
  std::vector<double> roots;
  const double disc = q * q / 4.0 + p * p * p / 27.0;
  if (disc > 0.0) {
    const double sd = std::sqrt(disc);
    const double u = std::cbrt(-q / 2.0 + sd);
    const double v = std::cbrt(-q / 2.0 - sd);
    roots.push_back(u + v + shift);
  } else if (disc == 0.0) {
    const double u = std::cbrt(-q / 2.0);
    roots.push_back(2.0 * u + shift);
    roots.push_back(-u + shift);
  } else {
    const double r = std::sqrt(-p * p * p / 27.0);
    const double phi = std::acos(std::clamp(-q / (2.0 * r), -1.0, 1.0));
    const double mag = 2.0 * std::sqrt(-p / 3.0);
    for (int k = 0; k < 3; ++k)
      roots.push_back(mag * std::cos((phi + 2.0 * M_PI * k) / 3.0) + shift);
  }
  return roots;
}

double polish_root(double x, double c3, double c2, double c1, double c0) {
  for (int it = 0; it < 50; ++it) {
    const double f = ((c3 * x + c2) * x + c1) * x + c0;
    const double df = (3.0 * c3 * x + 2.0 * c2) * x + c1;
    if (df == 0.0) break;
    const double step = f / df;
    x -= step;
    if (std::abs(step) < 1e-16 * std::max(1.0, std::abs(x))) break;
  }
  return x;
}

}  // namespace

double m_step_alpha(const std::vector<PosteriorStats>& stats, const VecD& lambda,
                    double lambda_floor, double alpha_max) {
  const int num_blocks = static_cast<int>(stats.size());
  if (num_blocks < 2) return 0.0;  // no transition terms constrain alpha
  const int n = static_cast<int>(lambda.size());

  // traces restricted to coefficients above the floor
  double pi_sum = 0.0, t_prev = 0.0, t_cur = 0.0;
  int n_eff = 0;
  std::vector<int> active;
  for (int i = 0; i < n; ++i)
    if (lambda(i) > lambda_floor) {
      active.push_back(i);
      ++n_eff;
    }
  if (n_eff == 0) return 0.0;

  for (int m = 1; m < num_blocks; ++m) {
    const VecD theta_prev = stats[m - 1].theta_diag();
    const VecD theta_cur = stats[m].theta_diag();
    for (int i : active) {
      pi_sum += stats[m].pi_diag(i).real() / lambda(i);
      t_prev += theta_prev(i) / lambda(i);
      t_cur += theta_cur(i) / lambda(i);
    }
  }

  const double big_a = static_cast<double>(num_blocks - 1) * n_eff;
  // A a^3 - Pi a^2 + (T - A) a - Pi = 0
  const double c3 = big_a, c2 = -pi_sum, c1 = t_prev + t_cur - big_a,
               c0 = -pi_sum;

  std::vector<double> roots = cubic_real_roots(c3, c2, c1, c0);
  for (double& r : roots) r = polish_root(r, c3, c2, c1, c0);

  // objective restricted to its alpha-dependent terms
  const auto q_alpha = [&](double a) {
    const double a2 = a * a;
    return (2.0 * a * pi_sum - a2 * t_prev - t_cur) / (1.0 - a2) -
           big_a * std::log1p(-a2);
  };

  std::vector<double> candidates;
  for (double r : roots) {
    if (r >= -1e-12 && r < 1.0)
      candidates.push_back(std::clamp(r, 0.0, alpha_max));
    else if (r >= 1.0 && r < 1.0 + 1e-6)
      candidates.push_back(alpha_max);  // boundary root, e.g. frozen channel
  }
  if (candidates.empty()) {
    // stationary point outside [0, 1): the boundary maximizer applies
    double best = 0.0;
    for (double probe : {0.0, alpha_max})
      if (q_alpha(probe) > q_alpha(best)) best = probe;
    bool any_real = !roots.empty();
    if (!any_real) {
      std::ostringstream oss;
      oss << "m_step_alpha: no real root in [0, 1); cubic coefficients "
          << c3 << ", " << c2 << ", " << c1 << ", " << c0;
      throw std::runtime_error(oss.str());
    }
    return best;
  }

  double best = candidates.front();
  for (double cand : candidates)
    if (q_alpha(cand) > q_alpha(best)) best = cand;
  return best;
}

EmResult em_fit(const std::vector<VecC>& y, const std::vector<MatC>& b,
                const QuantizerSpec& spec, double noise_var,
                const EmConfig& config, const ModelParams& init,
                const ModelParams* truth) {
  EmResult res;
  res.params = init;
  res.params.alpha = std::clamp(res.params.alpha, 0.0, config.alpha_max);
  for (Eigen::Index i = 0; i < res.params.lambda.size(); ++i)
    res.params.lambda(i) = std::max(res.params.lambda(i), config.lambda_floor);

  EStepResult estep;
  bool have_warm = false;
  for (int iter = 1; iter <= config.max_em_iters; ++iter) {
    const auto start = std::chrono::steady_clock::now();
    estep = e_step(y, b, res.params, spec, noise_var, config,
                   have_warm ? &estep : nullptr);
    have_warm = true;

    // fixed-point alternation of the two closed-form updates
    double alpha = res.params.alpha;
    VecD lambda = res.params.lambda;
    for (int fp = 0; fp < config.fixed_point_iters; ++fp) {
      const VecD lambda_new =
          m_step_lambda(estep.blocks, alpha, config.lambda_floor);
      double alpha_new = m_step_alpha(estep.blocks, lambda_new,
                                      config.lambda_floor, config.alpha_max);
      const double dl = (lambda_new - lambda).norm() /
                        std::max(lambda.norm(), 1e-300);
      const double da = std::abs(alpha_new - alpha);
      lambda = lambda_new;
      alpha = alpha_new;
      if (dl < config.tol_fixed_point && da < config.tol_fixed_point) break;
    }

    const double rel_change =
        std::max(std::abs(alpha - res.params.alpha) /
                     std::max(std::abs(res.params.alpha), 1e-300),
                 (lambda - res.params.lambda).norm() /
                     std::max(res.params.lambda.norm(), 1e-300));
    res.params.alpha = alpha;
    res.params.lambda = lambda;
    res.iterations = iter;

    EmTracePoint tp;
    tp.iter = iter;
    tp.alpha_hat = alpha;
    tp.seconds = std::chrono::duration<double>(
                     std::chrono::steady_clock::now() - start)
                     .count();
    if (truth) {
      tp.mse_alpha_db = mse_metric(alpha, truth->alpha).db;
      tp.mse_lambda_db = mse_metric(lambda, truth->lambda).db;
    } else {
      tp.mse_alpha_db = std::numeric_limits<double>::quiet_NaN();
      tp.mse_lambda_db = std::numeric_limits<double>::quiet_NaN();
    }
    res.trace.push_back(tp);

    if (rel_change < config.tol_param) break;
  }
  res.posterior = estep.blocks;
  return res;
}

std::string em_trace_csv(const std::vector<EmTracePoint>& trace) {
  std::ostringstream oss;
  oss << "iter,mse_alpha_db,mse_lambda_db,alpha_hat,seconds\n";
  oss.precision(17);
  for (const auto& tp : trace)
    oss << tp.iter << ',' << tp.mse_alpha_db << ',' << tp.mse_lambda_db << ','
        << tp.alpha_hat << ',' << tp.seconds << '\n';
  return oss.str();
}

}  // namespace chantrack
