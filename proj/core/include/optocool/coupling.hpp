#pragma once

#include <complex>

namespace optocool {

/// SI constants. The defaults are CODATA 2018 exact values; construct explicitly
/// (e.g. hbar = k_B = 1) only for unit-system tests.
struct PhysicalConstants {
  double hbar = 1.054571817e-34;  // J s
  double k_B = 1.380649e-23;      // J/K
  double c = 299792458.0;         // m/s

  void validate() const;
};

/// Laboratory inputs. Frequencies nu_m and nu_0 are in Hz; all rates in 1/s.
struct PhysicalSetup {
  double m = 0.0;         // mirror mass, kg
  double nu_m = 0.0;      // mechanical frequency, Hz
  double gamma_m = 0.0;   // mechanical damping rate
  double L = 0.0;         // cavity length, m
  double nu_0 = 0.0;      // laser frequency, Hz
  double T_r = 0.0;       // input mirror transmittivity
  double P_in = 0.0;      // input power, W
  double T = 0.0;         // bath temperature, K
  double eta = 1.0;       // detector efficiency
  double g = 0.0;         // feedback gain
  double phi = 0.0;       // feedback phase, rad
  double Delta = 0.0;     // detuning, rad/s

  /// Throws ValidationError naming the first offending field.
  void validate() const;
};

enum class AdiabaticRegime { ok, marginal };

/// Linearized cavity/mirror coupling derived from a PhysicalSetup.
struct DerivedCoupling {
  double omega_m = 0.0;
  double omega_0 = 0.0;
  double gamma_b = 0.0;             // cavity field decay, c T_r / 2L
  double G = 0.0;                   // single-photon optomechanical coupling
  double beta_in = 0.0;             // input amplitude, sqrt(photons/s)
  std::complex<double> beta_s{};    // intracavity steady amplitude
  double varphi = 0.0;              // arg(beta_s)
  double chi = 0.0;                 // signed: -4 G |beta_s|
  double Gamma = 0.0;               // measurement rate chi^2 / gamma_b
  double x_s = 0.0;                 // static mirror displacement, m
  double Q_m = 0.0;                 // omega_m / gamma_m (infinite when gamma_m = 0)
  double n_bar = 0.0;               // k_B T / (hbar omega_m)
  AdiabaticRegime adiabatic = AdiabaticRegime::ok;  // marginal when gamma_b <= 10 |chi|
};

/// Derives all coupling parameters. The cavity frequency is identified with the
/// laser frequency (omega_c ~ omega_0); the residual offset lives in Delta.
DerivedCoupling derive_coupling(const PhysicalSetup& setup,
                                const PhysicalConstants& constants = {});

}  // namespace optocool
