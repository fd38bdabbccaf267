#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "optocool/bath.hpp"

namespace optocool {

using cplx = std::complex<double>;
using DensityMatrix = Eigen::MatrixXcd;
using SparseOp = Eigen::SparseMatrix<cplx, Eigen::ColMajor>;

/// Population above which the last number state signals a truncation that is too small.
inline constexpr double kTailThreshold = 1e-10;

struct FockConfig {
  std::size_t dim = 80;
  double dt = 1e-3;       // initial step; the step is adapted afterwards
  double t_final = 500.0;
  double tol = 1e-9;      // steady when |d<a>/dt|, |d<a^2>/dt|, |d<a^dag a>/dt| all fall below this
  double rtol = 1e-9;     // local error control
  double atol = 1e-15;    // per element; small so the tail is controlled on its own scale
  std::size_t max_steps = 5'000'000;

  void validate() const;
};

/// Truncated master-equation generator for the feedback-cooled mirror:
///   gamma (N+1) D[a] + gamma N D[a^dag] - gamma M S[a^dag] - gamma M* S[a]
///   - i omega_m [a^dag a, .] - squeeze ([a^2, .] - [a^dag^2, .])
/// where D[c] rho = (2 c rho c^dag - c^dag c rho - rho c^dag c)/2 and
/// S[c] rho = (2 c rho c - c^2 rho - rho c^2)/2. Linear and trace-preserving.
class MasterEquationGenerator {
 public:
  MasterEquationGenerator(const EffectiveBath& bath, std::size_t dim);

  std::size_t dim() const noexcept { return dim_; }
  bool lindblad_positive() const noexcept { return lindblad_positive_; }
  const SparseOp& annihilation() const noexcept { return a_; }
  const SparseOp& creation() const noexcept { return ad_; }

  DensityMatrix apply(const DensityMatrix& rho) const;

 private:
  std::size_t dim_;
  bool lindblad_positive_;
  cplx w_decay_, w_excite_, w_sq_plus_, w_sq_minus_;
  SparseOp a_, ad_;
  // Banded form used by apply(): diagonals of K and K', their a^2 / a^dag^2
  // coefficients, and sqrt(k) for k = 0..dim+1.
  std::vector<cplx> left_diag_, right_diag_;
  cplx left_a2_, left_ad2_, right_a2_, right_ad2_;
  std::vector<double> root_;
};

MasterEquationGenerator build_generator(const EffectiveBath& bath, std::size_t dim);

struct FockMoments {
  cplx a{};
  cplx a2{};
  double n = 0.0;  // <a^dag a>
  double var_x = 0.0;
  double var_p = 0.0;
  double cov_xp_sym = 0.0;
};

FockMoments fock_moments(const DensityMatrix& rho);

struct FockSolution {
  DensityMatrix rho;
  FockMoments moments;
  double trace_error = 0.0;
  double max_trace_error = 0.0;         // over all accepted steps
  double max_hermiticity_error = 0.0;   // max |rho - rho^dag| over all accepted steps
  double min_eigenvalue = 0.0;          // of the Hermitian part
  double tail_population = 0.0;
  double t_final = 0.0;
  std::size_t steps = 0;
  std::vector<std::string> warnings;
};

/// Thermal state (1 - q) sum_n q^n |n><n| with q = exp(-1/n_bar), n_bar = k_B T / (hbar omega_m),
/// renormalized on the truncated space.
DensityMatrix thermal_state(double n_bar, std::size_t dim);

/// Number state |n><n|.
DensityMatrix fock_state(std::size_t n, std::size_t dim);

/// Integrates to time t with the adaptive Runge-Kutta-Fehlberg 4(5) pair,
/// advancing the fourth-order solution.
FockSolution evolve(const MasterEquationGenerator& gen, const FockConfig& cfg,
                    const DensityMatrix& rho0, double t);

/// Integrates until the tracked moment derivatives fall below cfg.tol.
/// Throws NumericalError when no steady state is reached by cfg.t_final and
/// TruncationError when the last number state holds more than kTailThreshold.
FockSolution evolve_to_steady(const MasterEquationGenerator& gen, const FockConfig& cfg,
                              const DensityMatrix& rho0);

/// Smallest truncation dim for which a thermal state with mean occupation
/// n_mean keeps less than kTailThreshold in the last level.
std::size_t required_dim(double n_mean);

}  // namespace optocool
