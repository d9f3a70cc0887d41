#include "chantrack/channel.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace chantrack {

namespace {

constexpr double kPi = 3.1415926535897932384626433832795;
constexpr double kTwoPi = 2.0 * kPi;
constexpr double kSpeedOfLight = 299792458.0;

}  // namespace

const MatC& dft_matrix(int n) {
  static std::map<int, MatC> cache;
  static std::mutex mtx;
  std::lock_guard<std::mutex> lock(mtx);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  MatC f(n, n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double ang = -kTwoPi * static_cast<double>(i) *
                         static_cast<double>(j) / static_cast<double>(n);
      f(i, j) = scale * std::complex<double>(std::cos(ang), std::sin(ang));
    }
  return cache.emplace(n, std::move(f)).first->second;
}

VecC steering_vector(double theta, const ArrayGeometry& geom) {
  if (theta < -kPi / 2 || theta > kPi / 2)
    throw std::domain_error("steering_vector: theta outside [-pi/2, pi/2]");
  if (geom.num_antennas < 1 || !(geom.spacing_over_wavelength > 0.0))
    throw std::invalid_argument("steering_vector: bad geometry");
  VecC a(geom.num_antennas);
  const double phase = kTwoPi * geom.spacing_over_wavelength * std::sin(theta);
  for (int n = 0; n < geom.num_antennas; ++n) {
    const double ang = phase * n;
    a(n) = std::complex<double>(std::cos(ang), std::sin(ang));
  }
  return a;
}

MatC gen_ray_channel(const RayChannelSpec& spec, const ArrayGeometry& geom,
                     Rng& rng) {
  if (!(spec.theta_min < spec.theta_max) || spec.num_rays < 1 ||
      spec.doppler_max_hz < 0.0 || spec.num_blocks < 1)
    throw std::invalid_argument("gen_ray_channel: bad spec");
  const int n = geom.num_antennas;
  MatC h = MatC::Zero(n, spec.num_blocks);
  const double gain_scale = 1.0 / std::sqrt(static_cast<double>(spec.num_rays));
  for (int r = 0; r < spec.num_rays; ++r) {
    const double theta = rng.uniform(spec.theta_min, spec.theta_max);
    const std::complex<double> gain = gain_scale * rng.cnormal();
    const double doppler =
        spec.doppler_max_hz * std::cos(rng.uniform(0.0, kTwoPi));
    const VecC a = steering_vector(theta, geom);
    for (int m = 0; m < spec.num_blocks; ++m) {
      const double ang =
          kTwoPi * doppler * (m + 1) * spec.block_duration_s;
      const std::complex<double> rot(std::cos(ang), std::sin(ang));
      h.col(m) += a * (gain * rot);
    }
  }
  return h;
}

VecC to_virtual(const VecC& h) {
  return dft_matrix(static_cast<int>(h.size())) * h;
}

VecC ar_evolve(const VecC& h_prev, const ModelParams& params, Rng& rng) {
  if (params.alpha < 0.0 || params.alpha > 1.0)
    throw std::domain_error("ar_evolve: alpha outside [0, 1]");
  if (params.lambda.size() != h_prev.size())
    throw std::invalid_argument("ar_evolve: dimension mismatch");
  const double innov = std::sqrt(1.0 - params.alpha * params.alpha);
  VecC out(h_prev.size());
  for (Eigen::Index i = 0; i < h_prev.size(); ++i) {
    const double lam = params.lambda(i);
    if (lam < 0.0) throw std::domain_error("ar_evolve: negative lambda");
    out(i) = params.alpha * h_prev(i) +
             innov * std::sqrt(lam) * rng.cnormal();
  }
  return out;
}

VecC draw_initial(const ModelParams& params, Rng& rng) {
  VecC out(params.lambda.size());
  for (Eigen::Index i = 0; i < params.lambda.size(); ++i)
    out(i) = std::sqrt(params.lambda(i)) * rng.cnormal();
  return out;
}

TrainingMatrix make_training_matrix(int n, int p, double pilot_power,
                                    Rng& rng) {
  if (p < 1 || p > n)
    throw std::invalid_argument("make_training_matrix: need 1 <= P <= N");
  if (!(pilot_power > 0.0))
    throw std::invalid_argument("make_training_matrix: pilot power <= 0");
  // random columns of a randomly phase-rotated DFT, i.e. of a unitary
  const MatC& f = dft_matrix(n);
  VecC phases(n);
  for (int i = 0; i < n; ++i) {
    const double ang = rng.uniform(0.0, kTwoPi);
    phases(i) = std::complex<double>(std::cos(ang), std::sin(ang));
  }
  // Fisher-Yates prefix to pick p distinct columns
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  for (int i = 0; i < p; ++i) {
    const int j = i + static_cast<int>(rng.next_u64() % (n - i));
    std::swap(idx[i], idx[j]);
  }
  const double scale = std::sqrt(pilot_power / p);
  TrainingMatrix t;
  t.pilot_power = pilot_power;
  t.x.resize(n, p);
  for (int c = 0; c < p; ++c)
    t.x.col(c) = scale * phases.asDiagonal() * f.col(idx[c]);
  return t;
}

MatC measurement_matrix(const TrainingMatrix& training) {
  const int n = static_cast<int>(training.x.rows());
  return training.x.transpose() * dft_matrix(n).adjoint();
}

VecC observe_block(const VecC& h_virtual, const TrainingMatrix& training,
                   double noise_var, Rng& rng) {
  if (training.x.rows() != h_virtual.size())
    throw std::invalid_argument("observe_block: dimension mismatch");
  if (noise_var < 0.0)
    throw std::invalid_argument("observe_block: negative noise variance");
  VecC q = measurement_matrix(training) * h_virtual;
  const double sd = std::sqrt(noise_var);
  for (Eigen::Index i = 0; i < q.size(); ++i) q(i) += sd * rng.cnormal();
  return q;
}

double calibrated_block_duration() {
  // solve J0(2 pi f_D T) = 0.9899 at 200 km/h, 2 GHz
  const double f_d = (200.0 / 3.6) * 2.0e9 / kSpeedOfLight;
  double lo = 0.0, hi = 1.0 / f_d;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (std::cyl_bessel_j(0.0, kTwoPi * f_d * mid) > 0.9899)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double velocity_to_alpha(double v_mps, double carrier_hz,
                         double block_duration_s) {
  if (v_mps < 0.0) throw std::invalid_argument("velocity_to_alpha: v < 0");
  const double f_d = v_mps * carrier_hz / kSpeedOfLight;
  double a = std::cyl_bessel_j(0.0, kTwoPi * f_d * block_duration_s);
  if (a > kAlphaMax) a = kAlphaMax;
  if (a < 0.0) a = 0.0;
  return a;
}

int support_width_from_angle_spread(int n, double angle_spread_deg) {
  const int w =
      static_cast<int>(std::ceil(n * angle_spread_deg / 180.0));
  return std::max(1, std::min(w, n));
}

ModelParams draw_sparse_params(const SparseModelSpec& spec, Rng& rng) {
  if (spec.n < 1 || spec.support_width < 1 || spec.support_width > spec.n)
    throw std::invalid_argument("draw_sparse_params: bad spec");
  ModelParams p;
  p.alpha = spec.alpha;
  p.lambda = VecD::Zero(spec.n);
  const int offset =
      static_cast<int>(rng.next_u64() % (spec.n - spec.support_width + 1));
  for (int i = 0; i < spec.support_width; ++i)
    p.lambda(offset + i) = rng.uniform(spec.lambda_lo, spec.lambda_hi);
  return p;
}

VirtualChannelPath gen_model_matched_path(const ModelParams& params,
                                          int num_blocks, Rng& rng) {
  if (num_blocks < 1)
    throw std::invalid_argument("gen_model_matched_path: num_blocks < 1");
  VirtualChannelPath path;
  const int n = static_cast<int>(params.lambda.size());
  path.values.resize(n, num_blocks);
  VecC h = draw_initial(params, rng);
  path.values.col(0) = h;
  for (int m = 1; m < num_blocks; ++m) {
    h = ar_evolve(h, params, rng);
    path.values.col(m) = h;
  }
  for (int i = 0; i < n; ++i)
    if (params.lambda(i) > 0.0) path.true_support.push_back(i);
  return path;
}

}  // namespace chantrack
