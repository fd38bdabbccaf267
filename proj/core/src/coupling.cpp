#include "optocool/coupling.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "optocool/errors.hpp"

namespace optocool {
namespace {

void require(bool ok, const char* field, const char* what) {
  if (!ok) throw ValidationError(field, what);
}

bool finite(double v) { return std::isfinite(v); }

}  // namespace

void PhysicalConstants::validate() const {
  require(finite(hbar) && hbar > 0.0, "hbar", "must be finite and positive");
  require(finite(k_B) && k_B > 0.0, "k_B", "must be finite and positive");
  require(finite(c) && c > 0.0, "c", "must be finite and positive");
}

void PhysicalSetup::validate() const {
  require(finite(m) && m > 0.0, "m", "mass must be positive");
  require(finite(nu_m) && nu_m > 0.0, "nu_m", "mechanical frequency must be positive");
  require(finite(gamma_m) && gamma_m >= 0.0, "gamma_m", "damping rate must be non-negative");
  require(finite(L) && L > 0.0, "L", "cavity length must be positive");
  require(finite(nu_0) && nu_0 > 0.0, "nu_0", "laser frequency must be positive");
  require(finite(T_r) && T_r > 0.0 && T_r <= 1.0, "T_r", "transmittivity must lie in (0, 1]");
  // P_in = 0 is the undriven cavity; it is allowed and gives a zero coupling.
  require(finite(P_in) && P_in >= 0.0, "P_in", "input power must be non-negative");
  require(finite(T) && T > 0.0, "T", "temperature must be positive");
  require(finite(eta) && eta > 0.0 && eta <= 1.0, "eta", "efficiency must lie in (0, 1]");
  require(finite(g) && g >= 0.0, "g", "feedback gain must be non-negative");
  require(finite(phi), "phi", "phase must be finite");
  require(finite(Delta), "Delta", "detuning must be finite");
}

DerivedCoupling derive_coupling(const PhysicalSetup& setup, const PhysicalConstants& constants) {
  constants.validate();
  setup.validate();

  const double two_pi = 2.0 * std::numbers::pi;
  DerivedCoupling out;
  out.omega_m = two_pi * setup.nu_m;
  out.omega_0 = two_pi * setup.nu_0;
  const double omega_c = out.omega_0;

  out.gamma_b = constants.c * setup.T_r / (2.0 * setup.L);
  out.G = std::sqrt(constants.hbar * omega_c * omega_c /
                    (2.0 * setup.m * out.omega_m * setup.L * setup.L));
  out.beta_in = std::sqrt(setup.P_in / (constants.hbar * out.omega_0));
  out.beta_s = std::sqrt(out.gamma_b) * out.beta_in /
               std::complex<double>(out.gamma_b / 2.0, -setup.Delta);
  out.varphi = std::arg(out.beta_s);

  const double beta_abs = std::abs(out.beta_s);
  out.chi = -4.0 * out.G * beta_abs;
  out.Gamma = out.chi * out.chi / out.gamma_b;
  out.x_s = constants.hbar * omega_c * beta_abs * beta_abs /
            (setup.m * out.omega_m * out.omega_m * setup.L);
  out.Q_m = setup.gamma_m > 0.0 ? out.omega_m / setup.gamma_m
                                : std::numeric_limits<double>::infinity();
  out.n_bar = constants.k_B * setup.T / (constants.hbar * out.omega_m);
  out.adiabatic = out.gamma_b > 10.0 * std::abs(out.chi) ? AdiabaticRegime::ok
                                                          : AdiabaticRegime::marginal;

  for (double v : {out.gamma_b, out.G, out.beta_in, out.beta_s.real(), out.beta_s.imag(),
                   out.chi, out.Gamma, out.x_s, out.n_bar}) {
    if (!std::isfinite(v))
      throw ValidationError("setup", "derived parameters overflow or are not finite");
  }
  return out;
}

}  // namespace optocool
