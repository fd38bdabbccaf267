#include "optocool/spectrum.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <sstream>
#include <numbers>

#include "optocool/errors.hpp"
#include "optocool/steady_state.hpp"

namespace optocool {
namespace {

void require_spectrum_regime(const EffectiveBath& bath, const char* op) {
  if (!is_minus_half_pi(bath.phi))
    throw UnsupportedPhaseError(std::string(op) + " is only defined for phi = -pi/2");
  if (!check_stability(bath).stable)
    throw InstabilityError(std::string(op) + ": parameters violate stability");
}

}  // namespace

double xi_modulus_squared(const EffectiveBath& b, double omega) {
  const double w2 = omega * omega;
  const double re = b.omega_m * b.omega_m + b.gamma_m * b.g - w2;
  const double im = b.gamma_m + b.g;
  return re * re + w2 * im * im;
}

double spectrum_at(const EffectiveBath& b, double omega) {
  const double w2 = omega * omega;
  const double gm2 = b.gamma_m * b.gamma_m;
  const double wm2 = b.omega_m * b.omega_m;
  // (gm2 + w2 + wm2)(2N+1) + (gm2 + w2 - wm2) 2 Re M, regrouped on the input-noise entries.
  const NoiseMatrix2 n = input_noise(b);
  return b.gamma * ((gm2 + w2) * n.xx + wm2 * n.pp) / xi_modulus_squared(b, omega);
}

SpectrumSeries eval_spectrum(const EffectiveBath& bath, std::span<const double> omega_grid) {
  if (omega_grid.empty()) throw ValidationError("omega_grid", "grid must not be empty");
  require_spectrum_regime(bath, "eval_spectrum");

  SpectrumSeries s;
  s.omega_grid.assign(omega_grid.begin(), omega_grid.end());
  s.values.reserve(omega_grid.size());
  for (double w : omega_grid) s.values.push_back(spectrum_at(bath, w));
  s.normalization = Normalization::raw;
  s.params_snapshot = bath;
  return s;
}

std::vector<double> uniform_grid(double lo, double hi, std::size_t points) {
  if (points == 0) throw ValidationError("points", "grid needs at least one point");
  if (!std::isfinite(lo) || !std::isfinite(hi) || hi < lo)
    throw ValidationError("omega_range", "expected finite lo <= hi");
  std::vector<double> grid(points);
  if (points == 1) {
    grid[0] = lo;
    return grid;
  }
  const double step = (hi - lo) / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) grid[i] = lo + step * static_cast<double>(i);
  grid.back() = hi;
  return grid;
}

std::vector<double> default_grid(const EffectiveBath& bath, std::size_t points) {
  const double half = 5.0 * (bath.omega_m + bath.g);
  return uniform_grid(-half, half, points);
}

SpectrumSeries fig1_scale(const SpectrumSeries& series, double var_x_g0) {
  if (series.normalization == Normalization::fig1_scaled)
    throw ValidationError("normalization", "series is already scaled");
  if (!(var_x_g0 > 0.0) || !std::isfinite(var_x_g0))
    throw ValidationError("var_x_g0", "reference variance must be positive");
  SpectrumSeries out = series;
  const double scale = 1.0 / (2.0 * std::numbers::pi * var_x_g0);
  for (double& v : out.values) v *= scale;
  out.normalization = Normalization::fig1_scaled;
  return out;
}

SumRuleResult sum_rule_check(const EffectiveBath& b) {
  require_spectrum_regime(b, "sum_rule_check");
  const double var_x = closed_form_moments(b).var_x;

  const double scale = b.omega_m + b.g + b.gamma_m;
  const double cutoff = 1e4 * scale;
  const double width = std::max(0.5 * (b.gamma_m + b.g), 1e-12 * scale);

  // Breakpoints resolve the resonance near omega_m, the zero-frequency peak at
  // high gain, and the slow algebraic decay out to the cutoff.
  std::vector<double> cuts{0.0, cutoff};
  for (double k = 0.25; k <= 4096.0; k *= 2.0) {
    cuts.push_back(b.omega_m + k * width);
    cuts.push_back(b.omega_m - k * width);
    cuts.push_back(k * width);
  }
  for (double x = scale; x < cutoff; x *= 4.0) cuts.push_back(x);
  cuts.push_back(b.omega_m);
  std::erase_if(cuts, [&](double x) { return !(x >= 0.0 && x <= cutoff); });
  std::sort(cuts.begin(), cuts.end());
  // Merge near-coincident cuts: a sliver a few ulps wide never meets a relative tolerance.
  cuts.erase(std::unique(cuts.begin(), cuts.end(),
                         [&](double a, double c) { return c - a <= 1e-9 * scale; }),
             cuts.end());
  cuts.back() = cutoff;

  // Per-piece tolerance sits above the Kronrod estimate's rounding floor (~4e-11
  // relative); asking for less makes every piece recurse to full depth.
  auto f = [&b](double w) { return spectrum_at(b, w); };
  double half_integral = 0.0;
  double total_error = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    double err = 0.0;
    half_integral += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        f, cuts[i], cuts[i + 1], 20, 1e-10, &err);
    total_error += err;
  }

  // S ~ c1/omega^2 + c2/omega^4 beyond the cutoff.
  const NoiseMatrix2 n = input_noise(b);
  const double gm2 = b.gamma_m * b.gamma_m;
  const double wm2 = b.omega_m * b.omega_m;
  const double k_spring = wm2 + b.gamma_m * b.g;
  const double f_quad = (b.gamma_m + b.g) * (b.gamma_m + b.g) - 2.0 * k_spring;
  const double c1 = b.gamma * n.xx;
  const double c2 = b.gamma * (gm2 * n.xx + wm2 * n.pp) - c1 * f_quad;
  half_integral += c1 / cutoff + c2 / (3.0 * cutoff * cutoff * cutoff);

  if (!std::isfinite(half_integral) || total_error > 1e-8 * std::abs(half_integral))
  {
    std::ostringstream msg;
    msg << "sum_rule_check: quadrature did not converge (error estimate " << total_error
        << " for integral " << half_integral << ")";
    throw NumericalError(msg.str());
  }

  SumRuleResult r;
  r.integral = 2.0 * half_integral / (2.0 * std::numbers::pi);
  r.var_x = var_x;
  r.rel_err = std::abs(r.integral - var_x) / std::abs(var_x);
  return r;
}

}  // namespace optocool
