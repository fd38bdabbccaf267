#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "optocool/bath.hpp"

namespace optocool {

enum class Normalization { raw, fig1_scaled };

/// Symmetrized position-quadrature spectrum S_g(omega), normalized so that
/// (1/2pi) * integral S_g d omega = <X^2>.
struct SpectrumSeries {
  std::vector<double> omega_grid;  // rad/s
  std::vector<double> values;
  Normalization normalization = Normalization::raw;
  EffectiveBath params_snapshot;
};

/// |Xi(omega)|^2 for Xi = (i omega + g)(i omega + gamma_m) + omega_m^2, expanded:
/// (omega_m^2 + gamma_m g - omega^2)^2 + omega^2 (gamma_m + g)^2.
double xi_modulus_squared(const EffectiveBath& bath, double omega);

/// Pointwise S_g(omega). No regime checks; prefer eval_spectrum.
double spectrum_at(const EffectiveBath& bath, double omega);

/// Evaluates S_g on a grid. Requires phi = -pi/2 and a stable bath.
SpectrumSeries eval_spectrum(const EffectiveBath& bath, std::span<const double> omega_grid);

std::vector<double> uniform_grid(double lo, double hi, std::size_t points);

/// Uniform grid over [-5(omega_m + g), 5(omega_m + g)].
std::vector<double> default_grid(const EffectiveBath& bath, std::size_t points = 4096);

/// Divides by 2 pi <X^2>_{g=0}. Refuses series that are already scaled.
SpectrumSeries fig1_scale(const SpectrumSeries& series, double var_x_g0);

struct SumRuleResult {
  double integral = 0.0;  // (1/2pi) * integral of S_g over the real line
  double var_x = 0.0;     // closed-form <X^2>
  double rel_err = 0.0;
};

/// Integrates S_g by adaptive Gauss-Kronrod quadrature on (-Omega, Omega) plus an
/// analytic c1/omega^2 + c2/omega^4 tail, and compares with the closed-form <X^2>.
SumRuleResult sum_rule_check(const EffectiveBath& bath);

}  // namespace optocool
