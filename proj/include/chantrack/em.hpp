#ifndef CHANTRACK_EM_HPP
#define CHANTRACK_EM_HPP

#include <string>
#include <vector>

#include "chantrack/channel.hpp"
#include "chantrack/gamp.hpp"

namespace chantrack {

// Unit of belief propagation; +inf variance (zero precision) encodes
// an uninformative message.
struct GaussianMessage {
  std::complex<double> mean{0.0, 0.0};
  double variance = std::numeric_limits<double>::infinity();
};

// Product of two Gaussian messages: precisions add, mean is
// precision-weighted.
GaussianMessage combine(const GaussianMessage& a, const GaussianMessage& b);

// Messages across the block chain for every coefficient.  fwd(i, m) is
// the transition belief entering block m from m-1; bwd(i, m) the one
// entering from m+1; meas(i, m) the aggregated measurement belief of
// block m, i.e. the extrinsic (r, nu_r) pair of the inner solver.
struct BlockMessages {
  MatC fwd_mean, bwd_mean, meas_mean;
  MatD fwd_var, bwd_var, meas_var;

  static BlockMessages init(int n, int m);
};

// Transition belief into block m (1-based like the chain; here m is a
// 0-based column).  Block 0 gets the stationary prior (0, lambda_i).
void forward_update(BlockMessages& msgs, const ModelParams& params, int m);

// Anti-causal counterpart; block M-1 keeps the uninformative boundary.
// Throws for alpha == 0 (the update divides by alpha).
void backward_update(BlockMessages& msgs, const ModelParams& params, int m);

GaussianMessage combine_time_prior(const GaussianMessage& fwd,
                                   const GaussianMessage& bwd);

// Posterior summaries of one block consumed by the M-step; only the
// diagonals of the second-moment matrices are materialized.
struct PosteriorStats {
  VecC h_hat;
  VecD tau;      // posterior variance diagonal
  VecC pi_diag;  // diag of E{h_{m-1} h_m^H}; empty for the first block

  VecD theta_diag() const;
};

// diag(Pi_{m-1,m}) = h_prev .* conj(h_cur) + alpha_prev * tau_prev
VecC compute_pi(const VecC& h_prev, const VecC& h_cur, const VecD& tau_prev,
                double alpha_prev);

struct EmConfig {
  int max_em_iters = 10;
  int k_max = 25;  // message-passing rounds per E-step
  DampingConfig damping;
  int fixed_point_iters = 20;
  double tol_param = 1e-4;
  double tol_estep = 1e-8;        // early exit on relative estimate change
  double tol_fixed_point = 1e-10;
  double alpha_max = kAlphaMax;
  double lambda_floor = 1e-12;
};

struct EStepResult {
  std::vector<PosteriorStats> blocks;
  // warm-start carry-over to the next EM iteration
  std::vector<GampState> gamp_states;
  BlockMessages messages;
};

// One expectation step: k_max rounds of forward sweep, per-block inner
// solver exchange, backward sweep.  warm may be null on the first call.
EStepResult e_step(const std::vector<VecC>& y, const std::vector<MatC>& b,
                   const ModelParams& params, const QuantizerSpec& spec,
                   double noise_var, const EmConfig& config,
                   const EStepResult* warm);

VecD m_step_lambda(const std::vector<PosteriorStats>& stats, double alpha,
                   double lambda_floor);

// Real root in [0, alpha_max] of the stationarity cubic; coefficients
// at the lambda floor are excluded from the traces.
double m_step_alpha(const std::vector<PosteriorStats>& stats, const VecD& lambda,
                    double lambda_floor, double alpha_max);

struct EmTracePoint {
  int iter = 0;
  double alpha_hat = 0.0;
  double mse_alpha_db = 0.0;   // NaN when no truth supplied
  double mse_lambda_db = 0.0;  // NaN when no truth supplied
  double seconds = 0.0;
};

struct EmResult {
  ModelParams params;
  std::vector<PosteriorStats> posterior;
  std::vector<EmTracePoint> trace;
  int iterations = 0;
};

// Full EM loop; truth (optional) only feeds the per-iteration trace.
EmResult em_fit(const std::vector<VecC>& y, const std::vector<MatC>& b,
                const QuantizerSpec& spec, double noise_var,
                const EmConfig& config, const ModelParams& init,
                const ModelParams* truth = nullptr);

// Trace rows as CSV: iter, mse_alpha_db, mse_lambda_db, alpha_hat, seconds.
std::string em_trace_csv(const std::vector<EmTracePoint>& trace);

}  // namespace chantrack

#endif
