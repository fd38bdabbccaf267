#pragma once

#include <cstddef>
#include <cstdint>
#include <Eigen/Core>
#include <vector>

#include "optocool/bath.hpp"
#include "optocool/spectrum.hpp"

namespace optocool {

enum class Discretization {
  exact,  // drift exponential plus exact per-step noise covariance
  euler,  // Euler-Maruyama, kept as a cross-check
};

struct SimConfig {
  double dt = 1e-3;
  double t_relax = 1.0;
  double t_sample = 100.0;
  std::size_t n_traj = 200;
  std::uint64_t seed = 0;
  std::size_t welch_segment = 4096;
  double welch_overlap = 0.5;
  Discretization scheme = Discretization::exact;
  unsigned threads = 0;          // 0: hardware concurrency
  std::size_t keep_trajectories = 0;  // raw (X, P) series retained for debugging

  /// Throws ValidationError when the step does not resolve the dynamics
  /// (dt * max(omega_m, gamma_m + g) >= 0.1) or the transient is too short
  /// (t_relax < 10 / slowest decay rate of the drift).
  void validate(const EffectiveBath& bath) const;
};

/// One step of the discretized linear SDE: s' = transition s + noise_factor z,
/// z standard normal, with noise_cov = noise_factor noise_factor^T.
struct LinearStep {
  Eigen::Matrix2d transition;
  Eigen::Matrix2d noise_cov;
  Eigen::Matrix2d noise_factor;
};

/// Exact scheme: transition = exp(A dt), noise_cov = integral_0^dt exp(A s) D exp(A^T s) ds
/// (Van Loan). Euler: I + A dt and D dt.
LinearStep discretize(const EffectiveBath& bath, double dt, Discretization scheme);

/// Step, transient and sample lengths that satisfy validate() for this bath.
SimConfig recommended_config(const EffectiveBath& bath);

/// Smallest |Re lambda| over the eigenvalues of the quadrature drift.
double slowest_decay_rate(const EffectiveBath& bath);

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
};

struct RecordedTrajectory {
  std::vector<double> x;
  std::vector<double> p;
};

struct TrajectoryEnsembleStats {
  Estimate var_x;
  Estimate var_p;
  Estimate cov_xp;
  /// Welch estimate of S_g on omega >= 0, in the same convention as eval_spectrum.
  SpectrumSeries psd;
  std::vector<double> psd_stderr;
  /// (1/2pi) * integral of the estimated PSD, with its between-trajectory error.
  Estimate psd_integral;
  /// 2 var_x^2 / stderr(var_x)^2: number of effectively independent X samples.
  double n_effective = 0.0;
  std::size_t n_traj = 0;
  std::vector<RecordedTrajectory> recorded;
};

/// Integrates the quadrature Langevin equations
///   dX = (g sin(phi) X + omega_m P) dt - sqrt(gamma) dW_X
///   dP = (-omega_m X - gamma_m P) dt - sqrt(gamma) dW_P
/// with white noises of symmetrized covariance input_noise(bath). Each
/// trajectory draws from its own stream keyed by (seed, index), so results do
/// not depend on the worker count.
TrajectoryEnsembleStats simulate(const EffectiveBath& bath, const SimConfig& cfg);

struct PsdComparisonOptions {
  double omega_max = 0.0;  // compare bins with omega <= omega_max; 0 means all bins
  double alpha = 1e-3;     // chi-square significance
  double peak_fraction = 0.5;  // peak region: analytic >= fraction * max
};

struct PsdComparison {
  std::vector<double> omega;
  std::vector<double> z_scores;
  double chi_square = 0.0;
  std::size_t dof = 0;
  double p_value = 1.0;
  double peak_max_rel_dev = 0.0;
  bool passed = true;
};

/// Per-bin z-scores of the simulated PSD against an analytic series evaluated
/// on the same bins. Throws ValidationError on a grid mismatch.
PsdComparison psd_vs_analytic(const TrajectoryEnsembleStats& stats, const SpectrumSeries& analytic,
                              const PsdComparisonOptions& opts = {});

}  // namespace optocool
