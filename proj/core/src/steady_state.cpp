#include "optocool/steady_state.hpp"

#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <cstdint>
#include <sstream>

#include "optocool/errors.hpp"
#include "optocool/lyapunov.hpp"

namespace optocool {
namespace {

constexpr double kUncertaintyBound = 1.0 / 16.0;

void require_inputs(const EffectiveBath& bath, const char* op) {
  if (!bath.from_inputs)
    throw ValidationError("bath", std::string(op) + " needs a bath built from physical inputs");
}

void require_closed_form_regime(const EffectiveBath& bath, const char* op) {
  require_inputs(bath, op);
  if (!is_minus_half_pi(bath.phi))
    throw UnsupportedPhaseError(std::string(op) +
                                " is only defined for phi = -pi/2; use lyapunov_moments");
  const StabilityReport st = check_stability(bath);
  if (!st.stable) throw InstabilityError(std::string(op) + ": parameters violate stability");
}

void finish(SteadyMoments& m) {
  if (!(m.var_x > 0.0) || (m.var_p && !(*m.var_p > 0.0))) {
    std::ostringstream msg;
    msg << "non-positive stationary variance (var_x = " << m.var_x;
    if (m.var_p) msg << ", var_p = " << *m.var_p;
    msg << ")";
    throw NumericalError(msg.str());
  }
  if (m.var_p) m.uncertainty_ok = m.var_x * *m.var_p >= kUncertaintyBound * (1.0 - 1e-12);
}

}  // namespace

double effective_temperature(const EffectiveBath& bath) {
  if (bath.g == 0.0) return bath.temperature;
  return bath.temperature * bath.omega_m * bath.omega_m / (bath.g * bath.g);
}

SteadyMoments closed_form_moments(const EffectiveBath& b) {
  require_closed_form_regime(b, "closed_form_moments");

  const double gm = b.gamma_m;
  const double wm2 = b.omega_m * b.omega_m;
  const double g = b.g;
  const double denom = (gm + g) * (wm2 + gm * g);
  const double fb = g > 0.0 ? g * g / (8.0 * b.eta * b.Gamma) : 0.0;
  // n_bar/2 + Gamma/(8 gamma_m), multiplied through by gamma_m so that gamma_m = 0 stays finite.
  const double thermal_rate = 0.5 * b.n_bar * gm + b.Gamma / 8.0;

  SteadyMoments m;
  m.method = MomentMethod::closed_form;
  m.var_x = fb * (gm * gm + wm2 + gm * g) / denom + thermal_rate * wm2 / denom;
  m.var_p = fb * wm2 / denom + thermal_rate * (g * g + wm2 + gm * g) / denom;
  m.cov_xp_sym = lyapunov_moments(b).cov_xp_sym;
  m.t_eff = effective_temperature(b);
  finish(m);
  return m;
}

SteadyMoments high_gain_moments(const EffectiveBath& b) {
  require_closed_form_regime(b, "high_gain_moments");
  if (!(b.g > 0.0)) throw ValidationError("g", "high-gain approximation requires g > 0");

  const double wm2 = b.omega_m * b.omega_m;
  const double g2 = b.g * b.g;
  SteadyMoments m;
  m.method = MomentMethod::high_gain;
  m.t_eff = effective_temperature(b);
  // k_B T_eff / (2 hbar omega_m) = n_bar omega_m^2 / (2 g^2)
  m.var_x = 0.5 * b.n_bar * wm2 / g2 + b.Gamma * wm2 / (8.0 * b.gamma_m * g2) +
            b.g / (8.0 * b.eta * b.Gamma);
  finish(m);
  return m;
}

SteadyMoments lyapunov_moments(const EffectiveBath& b) {
  const Drift2 d = quadrature_drift(b);
  const NoiseMatrix2 n = input_noise(b);

  Eigen::Matrix2d A;
  A << d.xx, d.xp, d.px, d.pp;
  // Both noises enter with prefactor -sqrt(gamma), so the diffusion is gamma * n.
  Eigen::Matrix2d C;
  C << n.xx, n.xp, n.xp, n.pp;
  C *= b.gamma;

  const Eigen::Matrix2d S = solve_lyapunov(A, C);

  SteadyMoments m;
  m.method = MomentMethod::lyapunov;
  m.var_x = S(0, 0);
  m.var_p = S(1, 1);
  m.cov_xp_sym = S(0, 1);
  m.t_eff = effective_temperature(b);
  finish(m);
  return m;
}

GainOptimum optimize_gain(const EffectiveBath& bath_template, double g_lo, double g_hi) {
  if (!std::isfinite(g_lo) || !std::isfinite(g_hi) || g_lo < 0.0 || g_lo > g_hi)
    throw ValidationError("g_range", "expected a finite interval 0 <= g_lo <= g_hi");
  require_inputs(bath_template, "optimize_gain");
  if (!is_minus_half_pi(bath_template.phi))
    throw UnsupportedPhaseError("optimize_gain is only defined for phi = -pi/2");

  BathInputs in = inputs_of(bath_template);
  auto var_x_at = [&in](double g) {
    BathInputs probe = in;
    probe.g = g;
    return closed_form_moments(build_bath(probe)).var_x;
  };

  if (g_lo == g_hi) return {g_lo, var_x_at(g_lo)};

  std::uintmax_t max_iter = 500;
  const auto [g_opt, v] = boost::math::tools::brent_find_minima(var_x_at, g_lo, g_hi, 24, max_iter);
  // Brent only searches the interior; the endpoints can be the minimum.
  GainOptimum best{g_opt, v};
  for (double edge : {g_lo, g_hi}) {
    const double ve = var_x_at(edge);
    if (ve < best.var_x_min) best = {edge, ve};
  }
  return best;
}

}  // namespace optocool
