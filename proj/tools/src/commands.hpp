#pragma once

#include <ostream>

#include "config.hpp"

namespace optocool::cli {

// Each command writes its primary output to cfg.out, or to `os` when no path is
// set. Errors propagate as optocool::Error subclasses.

/// DerivedCoupling, EffectiveBath and StabilityReport. An unstable bath is
/// reported (stable = false), not raised.
void cmd_derive(const RunConfig& cfg, std::ostream& os);
/// Closed-form, Lyapunov and high-gain moments side by side, where each applies.
void cmd_variance(const RunConfig& cfg, std::ostream& os);
/// Spectrum series per gain, raw or scaled by 2 pi <X^2>_{g=0}, with a sum-rule check.
/// CSV output puts the sum rule in a sidecar "<out stem>.sumrule.csv".
void cmd_spectrum(const RunConfig& cfg, std::ostream& os);
/// Stats document to cfg.out and the PSD table to "<out stem>.psd.csv".
void cmd_simulate(const RunConfig& cfg, std::ostream& os);
/// Steady state of the truncated master equation. Refuses runs whose n_bar or
/// truncation exceeds the configured ceilings.
void cmd_fock(const RunConfig& cfg, std::ostream& os);
/// Cartesian sweep over g, phi, Gamma, eta and T; one row per point in
/// lexicographic index order (g outermost).
void cmd_sweep(const RunConfig& cfg, std::ostream& os);
/// Simulated moments and PSD against the analytic values.
void cmd_compare(const RunConfig& cfg, std::ostream& os);

/// Full command line: parses arguments, runs the verb and maps errors to exit
/// codes (0 success, 2 validation, 3 instability, 4 numerical).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace optocool::cli
