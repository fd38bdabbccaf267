#include "optocool/langevin.hpp"

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <atomic>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <random>
#include <sstream>
#include <thread>
#include <unsupported/Eigen/MatrixFunctions>

#include "optocool/errors.hpp"
#include "optocool/welch.hpp"

namespace optocool {
namespace {

Eigen::Matrix2d drift_matrix(const EffectiveBath& b) {
  const Drift2 d = quadrature_drift(b);
  Eigen::Matrix2d A;
  A << d.xx, d.xp, d.px, d.pp;
  return A;
}

/// gamma * input_noise: the diffusion matrix of the SDE.
Eigen::Matrix2d diffusion_matrix(const EffectiveBath& b) {
  const NoiseMatrix2 n = input_noise(b);
  const double mag = std::abs(n.xx) + std::abs(n.pp);
  const double lmin = 0.5 * (n.xx + n.pp) - std::hypot(0.5 * (n.xx - n.pp), n.xp);
  if (lmin < -1e-12 * std::max(1.0, mag)) {
    std::ostringstream msg;
    msg << "symmetrized input-noise covariance is not positive semidefinite (min eigenvalue "
        << lmin << " at N = " << b.N << ", M = " << b.M.real() << (b.M.imag() < 0 ? " - " : " + ")
        << std::abs(b.M.imag()) << "i); no classical noise embedding exists";
    throw ValidationError("noise_covariance", msg.str());
  }
  Eigen::Matrix2d D;
  D << n.xx, n.xp, n.xp, n.pp;
  return b.gamma * D;
}

/// Lower Cholesky factor of a symmetric positive semidefinite 2x2 matrix.
Eigen::Matrix2d psd_cholesky(const Eigen::Matrix2d& Q) {
  const double l00 = std::sqrt(std::max(Q(0, 0), 0.0));
  const double l10 = l00 > 0.0 ? Q(1, 0) / l00 : 0.0;
  const double l11 = std::sqrt(std::max(Q(1, 1) - l10 * l10, 0.0));
  Eigen::Matrix2d L;
  L << l00, 0.0, l10, l11;
  return L;
}

}  // namespace

LinearStep discretize(const EffectiveBath& b, double dt, Discretization scheme) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("dt", "must be positive");
  const Eigen::Matrix2d A = drift_matrix(b);
  const Eigen::Matrix2d D = diffusion_matrix(b);
  LinearStep maps;
  if (scheme == Discretization::euler) {
    maps.transition = Eigen::Matrix2d::Identity() + A * dt;
    maps.noise_cov = D * dt;
    maps.noise_factor = psd_cholesky(maps.noise_cov);
    return maps;
  }
  // Van Loan: exp([[-A, D], [0, A^T]] dt) = [[., F12], [0, F22]] with
  // exp(A dt) = F22^T and the step covariance Q = exp(A dt) F12.
  Eigen::Matrix4d block = Eigen::Matrix4d::Zero();
  block.topLeftCorner<2, 2>() = -A * dt;
  block.topRightCorner<2, 2>() = D * dt;
  block.bottomRightCorner<2, 2>() = A.transpose() * dt;
  const Eigen::Matrix4d F = block.exp();
  maps.transition = F.bottomRightCorner<2, 2>().transpose();
  Eigen::Matrix2d Q = maps.transition * F.topRightCorner<2, 2>();
  Q = 0.5 * (Q + Q.transpose()).eval();
  maps.noise_cov = Q;
  maps.noise_factor = psd_cholesky(Q);
  return maps;
}

namespace {

double pairwise_sum(const double* v, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise_sum(v, h) + pairwise_sum(v + h, n - h);
}

Estimate mean_and_error(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  const double mean = pairwise_sum(v.data(), v.size()) / n;
  std::vector<double> dev(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) dev[i] = (v[i] - mean) * (v[i] - mean);
  const double var = pairwise_sum(dev.data(), dev.size()) / (n - 1.0);
  return {mean, std::sqrt(var / n)};
}

struct TrajectoryResult {
  double x2 = 0.0, p2 = 0.0, xp = 0.0;
  std::vector<double> psd;
  double psd_integral = 0.0;
};

std::mt19937_64 trajectory_stream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

double slowest_decay_rate(const EffectiveBath& bath) {
  const Eigen::Matrix2d A = drift_matrix(bath);
  const Eigen::Vector2cd ev = A.eigenvalues();
  return std::min(std::abs(ev(0).real()), std::abs(ev(1).real()));
}

void SimConfig::validate(const EffectiveBath& bath) const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("dt", "must be positive");
  const double fastest = std::max(bath.omega_m, bath.gamma_m + bath.g);
  if (!(dt * fastest < 0.1)) {
    std::ostringstream msg;
    msg << "dt * max(omega_m, gamma_m + g) = " << dt * fastest << " must be below 0.1";
    throw ValidationError("dt", msg.str());
  }
  const double slow = slowest_decay_rate(bath);
  if (!(t_relax >= 10.0 / slow)) {
    std::ostringstream msg;
    msg << "t_relax must be at least 10 / slowest decay rate = " << 10.0 / slow;
    throw ValidationError("t_relax", msg.str());
  }
  if (!(t_sample > 0.0) || !std::isfinite(t_sample))
    throw ValidationError("t_sample", "must be positive");
  if (n_traj < 2) throw ValidationError("n_traj", "need at least two trajectories for error bars");
  if (static_cast<double>(welch_segment) * dt > t_sample)
    throw ValidationError("welch_segment", "segment is longer than the sampled duration");
}

SimConfig recommended_config(const EffectiveBath& bath) {
  SimConfig cfg;
  const double fastest = std::max(bath.omega_m, bath.gamma_m + bath.g);
  cfg.dt = 0.02 / fastest;
  const double slow = slowest_decay_rate(bath);
  cfg.t_relax = 12.0 / slow;
  cfg.t_sample = std::max(100.0 / slow, 4.0 * static_cast<double>(cfg.welch_segment) * cfg.dt);
  return cfg;
}

TrajectoryEnsembleStats simulate(const EffectiveBath& bath, const SimConfig& cfg) {
  if (!is_minus_half_pi(bath.phi))
    throw UnsupportedPhaseError("simulate integrates the phi = -pi/2 Langevin equations only");
  if (!check_stability(bath).stable) throw InstabilityError("simulate: parameters violate stability");
  cfg.validate(bath);

  const LinearStep maps = discretize(bath, cfg.dt, cfg.scheme);
  const auto n_relax = static_cast<std::size_t>(std::ceil(cfg.t_relax / cfg.dt));
  const auto n_sample = static_cast<std::size_t>(std::ceil(cfg.t_sample / cfg.dt));

  std::vector<TrajectoryResult> results(cfg.n_traj);
  std::vector<RecordedTrajectory> recorded(std::min(cfg.keep_trajectories, cfg.n_traj));
  std::vector<double> psd_omega;
  {
    const WelchEstimator probe(cfg.welch_segment, cfg.welch_overlap, cfg.dt);
    psd_omega = probe.frequencies();
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    WelchEstimator welch(cfg.welch_segment, cfg.welch_overlap, cfg.dt);
    std::vector<double> xs(n_sample);
    std::vector<double> ps(n_sample);
    std::normal_distribution<double> normal(0.0, 1.0);
    const Eigen::Matrix2d& Phi = maps.transition;
    const Eigen::Matrix2d& Lq = maps.noise_factor;

    for (std::size_t k = next.fetch_add(1); k < cfg.n_traj; k = next.fetch_add(1)) {
      auto rng = trajectory_stream(cfg.seed, k);
      Eigen::Vector2d s = Eigen::Vector2d::Zero();
      auto advance = [&]() {
        const Eigen::Vector2d z(normal(rng), normal(rng));
        s = Phi * s + Lq * z;
      };
      for (std::size_t i = 0; i < n_relax; ++i) advance();
      for (std::size_t i = 0; i < n_sample; ++i) {
        advance();
        xs[i] = s(0);
        ps[i] = s(1);
      }

      TrajectoryResult& r = results[k];
      std::vector<double> buf(n_sample);
      for (std::size_t i = 0; i < n_sample; ++i) buf[i] = xs[i] * xs[i];
      r.x2 = pairwise_sum(buf.data(), n_sample) / static_cast<double>(n_sample);
      for (std::size_t i = 0; i < n_sample; ++i) buf[i] = ps[i] * ps[i];
      r.p2 = pairwise_sum(buf.data(), n_sample) / static_cast<double>(n_sample);
      for (std::size_t i = 0; i < n_sample; ++i) buf[i] = xs[i] * ps[i];
      r.xp = pairwise_sum(buf.data(), n_sample) / static_cast<double>(n_sample);
      r.psd = welch.estimate(xs);
      r.psd_integral = two_sided_integral(r.psd, welch.bin_width());
      if (k < recorded.size()) recorded[k] = {xs, ps};
    }
  };

  unsigned n_workers = cfg.threads != 0 ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  n_workers = static_cast<unsigned>(std::min<std::size_t>(n_workers, cfg.n_traj));
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 1; w < n_workers; ++w) pool.emplace_back(worker);
    worker();
  }

  TrajectoryEnsembleStats out;
  out.n_traj = cfg.n_traj;
  std::vector<double> col(cfg.n_traj);
  auto gather = [&](auto field) {
    for (std::size_t k = 0; k < cfg.n_traj; ++k) col[k] = field(results[k]);
    return mean_and_error(col);
  };
  out.var_x = gather([](const TrajectoryResult& r) { return r.x2; });
  out.var_p = gather([](const TrajectoryResult& r) { return r.p2; });
  out.cov_xp = gather([](const TrajectoryResult& r) { return r.xp; });
  out.psd_integral = gather([](const TrajectoryResult& r) { return r.psd_integral; });

  out.psd.omega_grid = psd_omega;
  out.psd.values.resize(psd_omega.size());
  out.psd_stderr.resize(psd_omega.size());
  for (std::size_t j = 0; j < psd_omega.size(); ++j) {
    const Estimate e = gather([j](const TrajectoryResult& r) { return r.psd[j]; });
    out.psd.values[j] = e.value;
    out.psd_stderr[j] = e.std_error;
  }
  out.psd.normalization = Normalization::raw;
  out.psd.params_snapshot = bath;

  out.n_effective = out.var_x.std_error > 0.0
                        ? 2.0 * out.var_x.value * out.var_x.value /
                              (out.var_x.std_error * out.var_x.std_error)
                        : 0.0;
  out.recorded = std::move(recorded);
  return out;
}

PsdComparison psd_vs_analytic(const TrajectoryEnsembleStats& stats, const SpectrumSeries& analytic,
                              const PsdComparisonOptions& opts) {
  const auto& w = stats.psd.omega_grid;
  if (analytic.omega_grid.size() != w.size())
    throw ValidationError("omega_grid", "analytic series and PSD estimate use different grids");
  const double scale = w.empty() ? 1.0 : std::max(1.0, std::abs(w.back()));
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (std::abs(analytic.omega_grid[i] - w[i]) > 1e-9 * scale)
      throw ValidationError("omega_grid", "analytic series and PSD estimate use different grids");
  }
  if (analytic.normalization != stats.psd.normalization)
    throw ValidationError("normalization", "analytic series and PSD estimate are scaled differently");

  PsdComparison cmp;
  double peak = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i)
    if (opts.omega_max <= 0.0 || w[i] <= opts.omega_max) peak = std::max(peak, analytic.values[i]);

  for (std::size_t i = 0; i < w.size(); ++i) {
    if (opts.omega_max > 0.0 && w[i] > opts.omega_max) continue;
    const double diff = stats.psd.values[i] - analytic.values[i];
    const double se = stats.psd_stderr[i];
    const double z = diff == 0.0 ? 0.0 : (se > 0.0 ? diff / se : std::copysign(INFINITY, diff));
    cmp.omega.push_back(w[i]);
    cmp.z_scores.push_back(z);
    cmp.chi_square += z * z;
    if (analytic.values[i] >= opts.peak_fraction * peak && analytic.values[i] > 0.0)
      cmp.peak_max_rel_dev = std::max(cmp.peak_max_rel_dev, std::abs(diff) / analytic.values[i]);
  }
  cmp.dof = cmp.z_scores.size();
  if (cmp.dof > 0 && std::isfinite(cmp.chi_square)) {
    const boost::math::chi_squared dist(static_cast<double>(cmp.dof));
    cmp.p_value = boost::math::cdf(boost::math::complement(dist, cmp.chi_square));
  } else if (cmp.dof > 0) {
    cmp.p_value = 0.0;
  }
  cmp.passed = cmp.p_value >= opts.alpha;
  return cmp;
}

}  // namespace optocool
