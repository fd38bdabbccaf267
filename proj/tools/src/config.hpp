#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "optocool/bath.hpp"
#include "optocool/coupling.hpp"
#include "optocool/fock.hpp"
#include "optocool/langevin.hpp"

namespace optocool::cli {

enum class OutputFormat { csv, json };

/// Which block of the config drives the bath. Exactly one may be present.
enum class BathSource {
  setup,          // laboratory parameters, coupling derived
  bath_inputs,    // scaled inputs: n_bar and Gamma given directly
  bath_override,  // raw (gamma, N, M) coefficients
};

struct GridOptions {
  std::optional<double> omega_min;
  std::optional<double> omega_max;
  std::size_t points = 0;  // 0: command default
};

struct FockOptions {
  FockConfig config;
  bool dim_given = false;
  double n_bar_ceiling = 50.0;
  std::size_t dim_ceiling = 300;
  std::string dump;  // binary density-matrix dump path, empty for none
};

/// Values for each sweep axis; an empty axis holds the configured value.
struct SweepAxes {
  std::vector<double> g, phi, Gamma, eta, T;
};

struct RunConfig {
  BathSource source = BathSource::setup;
  PhysicalSetup setup;
  BathInputs inputs;
  DirectCoefficients direct;
  PhysicalConstants constants;
  bool unsafe_constants = false;

  GridOptions grid;
  nlohmann::json sim = nlohmann::json::object();  // fields applied over recommended_config
  FockOptions fock;
  SweepAxes sweep;
  std::string compare_stats;  // stats JSON from a previous simulate run; empty: simulate now

  std::string out;
  OutputFormat format = OutputFormat::json;
  std::optional<std::uint64_t> seed;
  std::vector<double> g_list;
  bool fig1 = false;
};

/// Parses a config document. Unknown keys, wrong types, missing required
/// fields and mixed bath sources raise ValidationError naming the field.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::filesystem::path& path);

/// One point of parameter space; unset members keep the configured value.
struct Point {
  std::optional<double> g, phi, Gamma, eta, T;
};

/// The configured bath, moved to `at`. Throws UnstableBathError like build_bath.
EffectiveBath make_bath(const RunConfig& cfg, const Point& at = {});
/// DerivedCoupling for setup-driven configs, nullopt otherwise.
std::optional<DerivedCoupling> make_coupling(const RunConfig& cfg, const Point& at = {});

/// recommended_config(bath) overlaid with the sim block and the --seed flag.
SimConfig make_sim_config(const RunConfig& cfg, const EffectiveBath& bath);

/// Parses "0,1,10" into doubles.
std::vector<double> parse_number_list(const std::string& text, const std::string& field);

}  // namespace optocool::cli
