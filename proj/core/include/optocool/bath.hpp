#pragma once

#include <complex>
#include <optional>

#include "optocool/coupling.hpp"

namespace optocool {

/// Mechanical and feedback parameters that determine the effective bath.
/// This is the "scaled" entry point: n_bar and Gamma are given directly rather
/// than derived from a laboratory setup.
struct BathInputs {
  double gamma_m = 0.0;
  double omega_m = 0.0;
  double n_bar = 0.0;   // k_B T / (hbar omega_m)
  double Gamma = 0.0;   // measurement rate
  double eta = 1.0;
  double g = 0.0;
  double phi = 0.0;
  /// Bath temperature in K, used only for T_eff. When absent it is inferred from
  /// n_bar with CODATA constants.
  std::optional<double> temperature;

  void validate() const;
};

/// Coefficients of the feedback master equation. The dissipator weights are
/// gamma (N+1), gamma N, -gamma M and -gamma M*; squeeze_coeff multiplies the
/// -([a^2, rho] - [a^dag^2, rho]) commutator.
struct EffectiveBath {
  double gamma = 0.0;
  double N = 0.0;
  std::complex<double> M{};
  double squeeze_coeff = 0.0;
  double omega_m = 0.0;

  double gamma_m = 0.0;
  double g = 0.0;
  double phi = 0.0;
  double Gamma = 0.0;
  double eta = 1.0;
  double n_bar = 0.0;
  double temperature = 0.0;

  /// False for baths assembled from raw (gamma, N, M) coefficients; closed-form
  /// moment formulas need the physical inputs and refuse such baths.
  bool from_inputs = true;
};

struct StabilityReport {
  bool stable = false;
  bool lindblad_positive = false;
  double margin_damping = 0.0;  // gamma_m - g sin(phi)
  double margin_spring = 0.0;   // omega_m^2 - gamma_m g sin(phi)
  double positivity_gap = 0.0;  // N(N+1) - |M|^2
};

/// Builds the effective phase-sensitive bath.
/// Throws UnstableBathError when gamma_m - g sin(phi) <= 0 and ValidationError
/// when g > 0 with Gamma = 0 (feedback without a measurement channel).
EffectiveBath build_bath(const BathInputs& inputs);
EffectiveBath build_bath(const DerivedCoupling& coupling, const PhysicalSetup& setup);

/// Raw (gamma, N, M) coefficients, bypassing physical derivation.
struct DirectCoefficients {
  double gamma = 0.0;
  double N = 0.0;
  std::complex<double> M{};
  double squeeze_coeff = 0.0;
  double omega_m = 0.0;
  double gamma_m = 0.0;
  double g = 0.0;
  double phi = 0.0;
};
EffectiveBath make_direct_bath(const DirectCoefficients& coeffs);

StabilityReport check_stability(const EffectiveBath& bath);

BathInputs inputs_of(const EffectiveBath& bath);

/// Drift of the (X, P) quadrature means implied by the master equation:
/// [[g sin(phi), omega_m], [-omega_m, -gamma_m]].
struct Drift2 {
  double xx, xp, px, pp;
};
Drift2 quadrature_drift(const EffectiveBath& bath);

/// Symmetrized white-noise intensity of (X_in, P_in) per unit time, without the
/// gamma prefactor: [[(2N+1+2Re M)/4, Im M/2], [Im M/2, (2N+1-2Re M)/4]].
struct NoiseMatrix2 {
  double xx, xp, pp;
};
NoiseMatrix2 input_noise(const EffectiveBath& bath);

bool is_minus_half_pi(double phi);

}  // namespace optocool
