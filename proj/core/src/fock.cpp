#include "optocool/fock.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "optocool/errors.hpp"

namespace optocool {
namespace {

SparseOp ladder(std::size_t dim) {
  std::vector<Eigen::Triplet<cplx>> t;
  for (std::size_t n = 1; n < dim; ++n)
    t.emplace_back(static_cast<int>(n - 1), static_cast<int>(n), std::sqrt(static_cast<double>(n)));
  SparseOp a(static_cast<int>(dim), static_cast<int>(dim));
  a.setFromTriplets(t.begin(), t.end());
  return a;
}

double hermiticity_error(const DensityMatrix& rho) {
  return (rho - rho.adjoint()).cwiseAbs().maxCoeff();
}

double trace_error(const DensityMatrix& rho) { return std::abs(rho.trace() - cplx(1.0, 0.0)); }

double min_hermitian_eigenvalue(const DensityMatrix& rho) {
  const DensityMatrix h = 0.5 * (rho + rho.adjoint());
  Eigen::SelfAdjointEigenSolver<DensityMatrix> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double tail(const DensityMatrix& rho) {
  const auto last = rho.rows() - 1;
  return rho(last, last).real();
}

// Runge-Kutta-Fehlberg 4(5) tableau.
constexpr std::array<double, 6> kC{0.0, 1.0 / 4.0, 3.0 / 8.0, 12.0 / 13.0, 1.0, 1.0 / 2.0};
constexpr double kA[6][5] = {
    {0, 0, 0, 0, 0},
    {1.0 / 4.0, 0, 0, 0, 0},
    {3.0 / 32.0, 9.0 / 32.0, 0, 0, 0},
    {1932.0 / 2197.0, -7200.0 / 2197.0, 7296.0 / 2197.0, 0, 0},
    {439.0 / 216.0, -8.0, 3680.0 / 513.0, -845.0 / 4104.0, 0},
    {-8.0 / 27.0, 2.0, -3544.0 / 2565.0, 1859.0 / 4104.0, -11.0 / 40.0}};
constexpr std::array<double, 6> kB4{25.0 / 216.0, 0.0, 1408.0 / 2565.0, 2197.0 / 4104.0, -1.0 / 5.0, 0.0};
constexpr std::array<double, 6> kB5{16.0 / 135.0,       0.0,          6656.0 / 12825.0,
                                    28561.0 / 56430.0, -9.0 / 50.0, 2.0 / 55.0};

class Integrator {
 public:
  Integrator(const MasterEquationGenerator& gen, const FockConfig& cfg) : gen_(gen), cfg_(cfg) {}

  /// Attempts one step of size h from rho. On acceptance rho is advanced and
  /// the returned value is true; h is updated either way.
  bool step(DensityMatrix& rho, const DensityMatrix& k1, double& h) {
    std::array<DensityMatrix, 6> k;
    k[0] = k1;
    for (int s = 1; s < 6; ++s) {
      DensityMatrix y = rho;
      for (int j = 0; j < s; ++j)
        if (kA[s][j] != 0.0) y += (h * kA[s][j]) * k[j];
      k[s] = gen_.apply(y);
    }
    DensityMatrix incr = DensityMatrix::Zero(rho.rows(), rho.cols());
    DensityMatrix err = DensityMatrix::Zero(rho.rows(), rho.cols());
    for (int s = 0; s < 6; ++s) {
      if (kB4[s] != 0.0) incr += (h * kB4[s]) * k[s];
      if (kB5[s] != kB4[s]) err += (h * (kB5[s] - kB4[s])) * k[s];
    }
    // Element-wise scale: tail entries are controlled on their own size, so
    // stiff top levels cannot park noise at rtol * max|rho| near steady state.
    const double e =
        (err.cwiseAbs().array() / (cfg_.atol + cfg_.rtol * (rho + incr).cwiseAbs().array().max(rho.cwiseAbs().array())))
            .maxCoeff();
    const double factor = e == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(e, -0.2), 0.2, 5.0);
    if (e <= 1.0) {
      rho += incr;
      h *= factor;
      return true;
    }
    h *= std::min(factor, 0.9);
    return false;
  }

 private:
  const MasterEquationGenerator& gen_;
  const FockConfig& cfg_;
};

/// Checks the state just produced by one accepted step, then removes that
/// step's anti-Hermitian rounding so it cannot accumulate over many steps.
void check_invariants(DensityMatrix& rho, FockSolution& sol) {
  const double te = trace_error(rho);
  const double he = hermiticity_error(rho);
  sol.max_trace_error = std::max(sol.max_trace_error, te);
  sol.max_hermiticity_error = std::max(sol.max_hermiticity_error, he);
  if (te > 1e-10 || he > 1e-12) {
    std::ostringstream msg;
    msg << "master-equation integration broke an invariant (trace error " << te
        << ", hermiticity error " << he << ")";
    throw NumericalError(msg.str());
  }
  rho = 0.5 * (rho + rho.adjoint()).eval();
}

void finalize(const MasterEquationGenerator& gen, DensityMatrix rho, FockSolution& sol) {
  sol.rho = std::move(rho);
  sol.moments = fock_moments(sol.rho);
  sol.trace_error = trace_error(sol.rho);
  sol.tail_population = tail(sol.rho);
  sol.min_eigenvalue = min_hermitian_eigenvalue(sol.rho);
  if (sol.min_eigenvalue < -1e-8) {
    std::ostringstream msg;
    msg << "density matrix has eigenvalue " << sol.min_eigenvalue;
    if (gen.lindblad_positive())
      throw NumericalError(msg.str() + " under a completely positive generator");
    sol.warnings.push_back(msg.str() + "; expected, the generator is not of Lindblad form (|M|^2 >= N(N+1))");
  }
}

void check_initial(const DensityMatrix& rho0, std::size_t dim) {
  if (static_cast<std::size_t>(rho0.rows()) != dim || static_cast<std::size_t>(rho0.cols()) != dim)
    throw ValidationError("rho0", "initial state has the wrong dimension");
  if (tail(rho0) > kTailThreshold)
    throw TruncationError(tail(rho0), "initial state populates the last number state; raise dim");
}

}  // namespace

void FockConfig::validate() const {
  if (dim < 4) throw ValidationError("dim", "truncation must keep at least 4 number states");
  if (!(dt > 0.0)) throw ValidationError("dt", "must be positive");
  if (!(t_final > 0.0)) throw ValidationError("t_final", "must be positive");
  if (!(tol > 0.0)) throw ValidationError("tol", "must be positive");
  if (!(rtol > 0.0) || !(atol > 0.0)) throw ValidationError("rtol", "tolerances must be positive");
}

MasterEquationGenerator::MasterEquationGenerator(const EffectiveBath& b, std::size_t dim)
    : dim_(dim), lindblad_positive_(check_stability(b).lindblad_positive) {
  if (dim < 4) throw ValidationError("dim", "truncation must keep at least 4 number states");
  a_ = ladder(dim);
  ad_ = SparseOp(a_.adjoint());

  w_decay_ = 0.5 * b.gamma * (b.N + 1.0);
  w_excite_ = 0.5 * b.gamma * b.N;
  w_sq_plus_ = -0.5 * b.gamma * b.M;
  w_sq_minus_ = -0.5 * b.gamma * std::conj(b.M);

  // Non-jump part acts as K rho + rho K' with
  //   K  = -w_d n - w_e aa^dag - w_+ a^dag^2 - w_- a^2 - i omega n - s (a^2 - a^dag^2)
  //   K' = -w_d n - w_e aa^dag - w_+ a^dag^2 - w_- a^2 + i omega n + s (a^2 - a^dag^2)
  // aa^dag is the truncated product, n + 1 except 0 in the last level, which
  // keeps the generator exactly trace preserving.
  const cplx i(0.0, 1.0);
  const cplx s(b.squeeze_coeff, 0.0);
  left_diag_.resize(dim);
  right_diag_.resize(dim);
  for (std::size_t k = 0; k < dim; ++k) {
    const double n = static_cast<double>(k);
    const double aad = k + 1 < dim ? n + 1.0 : 0.0;
    const cplx common = -w_decay_ * n - w_excite_ * aad;
    left_diag_[k] = common - i * b.omega_m * n;
    right_diag_[k] = common + i * b.omega_m * n;
  }
  left_a2_ = -w_sq_minus_ - s;
  left_ad2_ = -w_sq_plus_ + s;
  right_a2_ = -w_sq_minus_ + s;
  right_ad2_ = -w_sq_plus_ - s;
  root_.resize(dim + 2);
  for (std::size_t k = 0; k < root_.size(); ++k) root_[k] = std::sqrt(static_cast<double>(k));
}

// Element-wise stencil; with r = root_ and d = dim:
//   (a rho a^dag)_mn = r[m+1] r[n+1] rho_{m+1,n+1}    (a rho a)_mn = r[m+1] r[n] rho_{m+1,n-1}
//   (a^dag rho a)_mn = r[m] r[n] rho_{m-1,n-1}         (a^dag rho a^dag)_mn = r[m] r[n+1] rho_{m-1,n+1}
//   (a^2 rho)_mn = r[m+1] r[m+2] rho_{m+2,n}           (a^dag^2 rho)_mn = r[m] r[m-1] rho_{m-2,n}
//   (rho a^2)_mn = r[n] r[n-1] rho_{m,n-2}             (rho a^dag^2)_mn = r[n+1] r[n+2] rho_{m,n+2}
// with out-of-range indices contributing nothing.
DensityMatrix MasterEquationGenerator::apply(const DensityMatrix& rho) const {
  const auto d = static_cast<Eigen::Index>(dim_);
  const double* r = root_.data();
  const cplx jd = 2.0 * w_decay_, jm = 2.0 * w_sq_minus_, je = 2.0 * w_excite_, jp = 2.0 * w_sq_plus_;
  DensityMatrix out(d, d);
  for (Eigen::Index n = 0; n < d; ++n) {
    for (Eigen::Index m = 0; m < d; ++m) {
      cplx v = (left_diag_[m] + right_diag_[n]) * rho(m, n);
      if (m + 2 < d) v += left_a2_ * (r[m + 1] * r[m + 2]) * rho(m + 2, n);
      if (m >= 2) v += left_ad2_ * (r[m] * r[m - 1]) * rho(m - 2, n);
      if (n >= 2) v += right_a2_ * (r[n] * r[n - 1]) * rho(m, n - 2);
      if (n + 2 < d) v += right_ad2_ * (r[n + 1] * r[n + 2]) * rho(m, n + 2);
      if (m + 1 < d) {
        if (n + 1 < d) v += jd * (r[m + 1] * r[n + 1]) * rho(m + 1, n + 1);
        if (n >= 1) v += jm * (r[m + 1] * r[n]) * rho(m + 1, n - 1);
      }
      if (m >= 1) {
        if (n >= 1) v += je * (r[m] * r[n]) * rho(m - 1, n - 1);
        if (n + 1 < d) v += jp * (r[m] * r[n + 1]) * rho(m - 1, n + 1);
      }
      out(m, n) = v;
    }
  }
  return out;
}

MasterEquationGenerator build_generator(const EffectiveBath& bath, std::size_t dim) {
  return MasterEquationGenerator(bath, dim);
}

FockMoments fock_moments(const DensityMatrix& rho) {
  const auto dim = static_cast<std::size_t>(rho.rows());
  const SparseOp a = ladder(dim);
  const SparseOp ad = SparseOp(a.adjoint());
  const cplx half_i(0.0, 0.5);
  const SparseOp X = 0.5 * (a + ad);
  const SparseOp P = -half_i * (a - ad);

  auto expect = [&rho](const SparseOp& op) { return (op * rho).trace(); };
  FockMoments m;
  m.a = expect(a);
  m.a2 = expect(a * a);
  m.n = expect(ad * a).real();
  const double x = expect(X).real();
  const double p = expect(P).real();
  m.var_x = expect(X * X).real() - x * x;
  m.var_p = expect(P * P).real() - p * p;
  m.cov_xp_sym = 0.5 * expect(X * P + P * X).real() - x * p;
  return m;
}

DensityMatrix thermal_state(double n_bar, std::size_t dim) {
  if (!(n_bar >= 0.0)) throw ValidationError("n_bar", "must be non-negative");
  DensityMatrix rho = DensityMatrix::Zero(static_cast<int>(dim), static_cast<int>(dim));
  if (n_bar == 0.0) {
    rho(0, 0) = 1.0;
    return rho;
  }
  const double q = std::exp(-1.0 / n_bar);
  double w = 1.0 - q;
  double total = 0.0;
  for (std::size_t n = 0; n < dim; ++n, w *= q) {
    rho(static_cast<int>(n), static_cast<int>(n)) = w;
    total += w;
  }
  return rho / total;
}

DensityMatrix fock_state(std::size_t n, std::size_t dim) {
  if (n >= dim) throw ValidationError("n", "number state outside the truncated space");
  DensityMatrix rho = DensityMatrix::Zero(static_cast<int>(dim), static_cast<int>(dim));
  rho(static_cast<int>(n), static_cast<int>(n)) = 1.0;
  return rho;
}

FockSolution evolve(const MasterEquationGenerator& gen, const FockConfig& cfg,
                    const DensityMatrix& rho0, double t) {
  cfg.validate();
  check_initial(rho0, gen.dim());
  if (!(t >= 0.0)) throw ValidationError("t", "must be non-negative");

  FockSolution sol;
  DensityMatrix rho = rho0;
  Integrator rk(gen, cfg);
  double now = 0.0;
  double h = cfg.dt;
  while (now < t) {
    if (sol.steps >= cfg.max_steps) throw NumericalError("evolve: step budget exhausted");
    double hs = std::min(h, t - now);
    const bool clipped = hs < h;
    const double before = hs;
    if (rk.step(rho, gen.apply(rho), hs)) {
      now += before;
      ++sol.steps;
      check_invariants(rho, sol);
      if (!clipped) h = hs;
    } else {
      h = hs;
    }
  }
  sol.t_final = now;
  finalize(gen, std::move(rho), sol);
  return sol;
}

FockSolution evolve_to_steady(const MasterEquationGenerator& gen, const FockConfig& cfg,
                              const DensityMatrix& rho0) {
  cfg.validate();
  check_initial(rho0, gen.dim());

  const SparseOp& a = gen.annihilation();
  const SparseOp a2 = a * a;
  const SparseOp n = gen.creation() * a;

  FockSolution sol;
  DensityMatrix rho = rho0;
  Integrator rk(gen, cfg);
  double now = 0.0;
  double h = cfg.dt;
  while (true) {
    const DensityMatrix k1 = gen.apply(rho);
    const double rate = std::max({std::abs((a * k1).trace()), std::abs((a2 * k1).trace()),
                                  std::abs((n * k1).trace())});
    if (rate < cfg.tol) break;
    if (now >= cfg.t_final) {
      std::ostringstream msg;
      if (tail(rho) > kTailThreshold) {
        msg << "no steady state within t_final = " << cfg.t_final << " and the last number state holds "
            << tail(rho) << " > " << kTailThreshold << "; raise dim";
        throw TruncationError(tail(rho), msg.str());
      }
      msg << "no steady state within t_final = " << cfg.t_final << " (moment rate " << rate << ")";
      throw NumericalError(msg.str());
    }
    if (sol.steps >= cfg.max_steps) throw NumericalError("evolve_to_steady: step budget exhausted");
    const double before = h;
    if (rk.step(rho, k1, h)) {
      now += before;
      ++sol.steps;
      check_invariants(rho, sol);
    }
  }
  sol.t_final = now;
  if (tail(rho) > kTailThreshold) {
    std::ostringstream msg;
    msg << "last number state holds population " << tail(rho) << " > " << kTailThreshold
        << "; raise dim";
    throw TruncationError(tail(rho), msg.str());
  }
  finalize(gen, std::move(rho), sol);
  return sol;
}

std::size_t required_dim(double n_mean) {
  if (!(n_mean >= 0.0)) throw ValidationError("n_mean", "must be non-negative");
  if (n_mean == 0.0) return 4;
  // (1 - q) q^(d-1) < threshold with q = n/(n+1).
  const double q = n_mean / (n_mean + 1.0);
  const double d = 1.0 + std::log(kTailThreshold / (1.0 - q)) / std::log(q);
  return std::max<std::size_t>(4, static_cast<std::size_t>(std::ceil(d)));
}

}  // namespace optocool
