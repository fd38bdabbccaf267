#include "optocool/bath.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "optocool/errors.hpp"

namespace optocool {
namespace {

void require(bool ok, const char* field, const char* what) {
  if (!ok) throw ValidationError(field, what);
}

}  // namespace

bool is_minus_half_pi(double phi) {
  return std::abs(phi + std::numbers::pi / 2.0) <= 1e-12;
}

void BathInputs::validate() const {
  require(std::isfinite(gamma_m) && gamma_m >= 0.0, "gamma_m", "must be non-negative");
  require(std::isfinite(omega_m) && omega_m > 0.0, "omega_m", "must be positive");
  require(std::isfinite(n_bar) && n_bar >= 0.0, "n_bar", "must be non-negative");
  require(std::isfinite(Gamma) && Gamma >= 0.0, "Gamma", "must be non-negative");
  require(std::isfinite(eta) && eta > 0.0 && eta <= 1.0, "eta", "must lie in (0, 1]");
  require(std::isfinite(g) && g >= 0.0, "g", "must be non-negative");
  require(std::isfinite(phi), "phi", "must be finite");
  if (temperature)
    require(std::isfinite(*temperature) && *temperature > 0.0, "T", "must be positive");
  if (g > 0.0 && Gamma == 0.0)
    throw ValidationError("Gamma", "feedback gain g > 0 requires a measurement rate Gamma > 0");
}

EffectiveBath build_bath(const BathInputs& in) {
  in.validate();

  const double s = std::sin(in.phi);
  const double c = std::cos(in.phi);
  const double gamma = in.gamma_m - in.g * s;
  if (!(gamma > 0.0)) {
    std::ostringstream msg;
    msg << "effective damping gamma = gamma_m - g sin(phi) = " << gamma
        << " is not positive; N and M are undefined";
    throw UnstableBathError(gamma, msg.str());
  }

  // g^2/(4 eta Gamma) with the g = 0, Gamma = 0 limit taken as zero.
  const double fb_noise = in.g > 0.0 ? in.g * in.g / (4.0 * in.eta * in.Gamma) : 0.0;

  EffectiveBath b;
  b.gamma = gamma;
  b.N = (in.gamma_m * (in.n_bar - 0.5) + in.Gamma / 4.0 + fb_noise + 0.5 * in.g * s) / gamma;
  b.M = -std::complex<double>(in.gamma_m * in.n_bar + in.Gamma / 4.0 - fb_noise,
                              -0.5 * in.g * c) /
        gamma;
  b.squeeze_coeff = (in.g * s + in.gamma_m) / 4.0;
  b.omega_m = in.omega_m;
  b.gamma_m = in.gamma_m;
  b.g = in.g;
  b.phi = in.phi;
  b.Gamma = in.Gamma;
  b.eta = in.eta;
  b.n_bar = in.n_bar;
  if (in.temperature) {
    b.temperature = *in.temperature;
  } else {
    const PhysicalConstants k;
    b.temperature = in.n_bar * k.hbar * in.omega_m / k.k_B;
  }
  b.from_inputs = true;
  return b;
}

EffectiveBath build_bath(const DerivedCoupling& coupling, const PhysicalSetup& setup) {
  BathInputs in;
  in.gamma_m = setup.gamma_m;
  in.omega_m = coupling.omega_m;
  in.n_bar = coupling.n_bar;
  in.Gamma = coupling.Gamma;
  in.eta = setup.eta;
  in.g = setup.g;
  in.phi = setup.phi;
  in.temperature = setup.T;
  return build_bath(in);
}

EffectiveBath make_direct_bath(const DirectCoefficients& d) {
  require(std::isfinite(d.gamma) && d.gamma > 0.0, "gamma", "must be positive");
  require(std::isfinite(d.N), "N", "must be finite");
  require(std::isfinite(d.M.real()) && std::isfinite(d.M.imag()), "M", "must be finite");
  require(std::isfinite(d.squeeze_coeff), "squeeze_coeff", "must be finite");
  require(std::isfinite(d.omega_m) && d.omega_m >= 0.0, "omega_m", "must be non-negative");
  require(std::isfinite(d.gamma_m) && d.gamma_m >= 0.0, "gamma_m", "must be non-negative");
  require(std::isfinite(d.g) && d.g >= 0.0, "g", "must be non-negative");
  require(std::isfinite(d.phi), "phi", "must be finite");

  EffectiveBath b;
  b.gamma = d.gamma;
  b.N = d.N;
  b.M = d.M;
  b.squeeze_coeff = d.squeeze_coeff;
  b.omega_m = d.omega_m;
  b.gamma_m = d.gamma_m;
  b.g = d.g;
  b.phi = d.phi;
  b.Gamma = 0.0;
  b.eta = 1.0;
  b.n_bar = 0.0;
  b.temperature = 0.0;
  b.from_inputs = false;
  return b;
}

StabilityReport check_stability(const EffectiveBath& b) {
  const double s = std::sin(b.phi);
  StabilityReport r;
  r.margin_damping = b.gamma_m - b.g * s;
  r.margin_spring = b.omega_m * b.omega_m - b.gamma_m * b.g * s;
  r.stable = r.margin_damping > 0.0 && r.margin_spring > 0.0;
  // N(N+1) - |M|^2 == 4 det(noise) - 1/4; the right side avoids cancelling two O(N^2) terms.
  const NoiseMatrix2 n = input_noise(b);
  r.positivity_gap = 4.0 * (n.xx * n.pp - n.xp * n.xp) - 0.25;
  r.lindblad_positive = r.positivity_gap > 0.0;
  return r;
}

BathInputs inputs_of(const EffectiveBath& b) {
  if (!b.from_inputs)
    throw ValidationError("bath", "bath was specified by raw coefficients; physical inputs unknown");
  BathInputs in;
  in.gamma_m = b.gamma_m;
  in.omega_m = b.omega_m;
  in.n_bar = b.n_bar;
  in.Gamma = b.Gamma;
  in.eta = b.eta;
  in.g = b.g;
  in.phi = b.phi;
  in.temperature = b.temperature;
  return in;
}

Drift2 quadrature_drift(const EffectiveBath& b) {
  if (b.from_inputs) return {b.g * std::sin(b.phi), b.omega_m, -b.omega_m, -b.gamma_m};
  // Raw coefficients: read the drift off the generator, d<X>/dt = (2 squeeze - gamma/2) X + omega_m P.
  const double xx = 2.0 * b.squeeze_coeff - 0.5 * b.gamma;
  const double pp = -2.0 * b.squeeze_coeff - 0.5 * b.gamma;
  return {xx, b.omega_m, -b.omega_m, pp};
}

NoiseMatrix2 input_noise(const EffectiveBath& b) {
  if (b.from_inputs) {
    // gamma (2N+1 +- 2 Re M) reduce to g^2/(eta Gamma) and 4 gamma_m n_bar + Gamma; using
    // them directly keeps full relative precision when n_bar is large.
    const double fb = b.g > 0.0 ? b.g * b.g / (b.eta * b.Gamma) : 0.0;
    return {fb / (4.0 * b.gamma), b.M.imag() / 2.0, (4.0 * b.gamma_m * b.n_bar + b.Gamma) / (4.0 * b.gamma)};
  }
  const double n2 = 2.0 * b.N + 1.0;
  return {(n2 + 2.0 * b.M.real()) / 4.0, b.M.imag() / 2.0, (n2 - 2.0 * b.M.real()) / 4.0};
}

}  // namespace optocool
