#pragma once

#include <optional>
#include <utility>

#include "optocool/bath.hpp"

namespace optocool {

enum class MomentMethod { closed_form, lyapunov, high_gain };

struct SteadyMoments {
  double var_x = 0.0;
  /// Absent for the high-gain approximation, which only predicts <X^2>.
  std::optional<double> var_p;
  std::optional<double> cov_xp_sym;
  double t_eff = 0.0;  // K
  MomentMethod method = MomentMethod::closed_form;
  /// var_x * var_p >= 1/16. Can only fail for parameter sets outside the
  /// high-temperature regime (n_bar < 1/2) or with a non-physical bath.
  bool uncertainty_ok = true;
};

/// Closed-form stationary variances of X = (a + a^dag)/2 and P = (a - a^dag)/2i
/// for phi = -pi/2. The symmetrized covariance comes from the Lyapunov solution
/// because no closed form exists for it.
SteadyMoments closed_form_moments(const EffectiveBath& bath);

/// Large-gain (g >> omega_m Q_m) approximation to <X^2>; var_p is not provided.
SteadyMoments high_gain_moments(const EffectiveBath& bath);

/// Stationary covariance of the linear quadrature Langevin equations. Valid for
/// any feedback phase: the drift is [[g sin(phi), omega_m], [-omega_m, -gamma_m]].
SteadyMoments lyapunov_moments(const EffectiveBath& bath);

/// T_eff = T omega_m^2 / g^2, and T itself when g = 0.
double effective_temperature(const EffectiveBath& bath);

struct GainOptimum {
  double g_opt = 0.0;
  double var_x_min = 0.0;
};

/// Minimizes the closed-form <X^2> over g in [g_lo, g_hi] (phi = -pi/2) by
/// Brent's method; relative tolerance on g is about 1e-6.
GainOptimum optimize_gain(const EffectiveBath& bath_template, double g_lo, double g_hi);

}  // namespace optocool
