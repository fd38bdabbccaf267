#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "optocool/bath.hpp"
#include "optocool/coupling.hpp"
#include "optocool/fock.hpp"
#include "optocool/langevin.hpp"
#include "optocool/spectrum.hpp"
#include "optocool/steady_state.hpp"

// JSON forms of the library results. Doubles are written with round-trip
// precision; non-finite values become the strings "inf", "-inf" and "nan".
// FockSolution omits the density matrix and stats omit recorded trajectories.
namespace optocool {

using nlohmann::json;

void to_json(json& j, const DerivedCoupling& v);
void from_json(const json& j, DerivedCoupling& v);
void to_json(json& j, const EffectiveBath& v);
void from_json(const json& j, EffectiveBath& v);
void to_json(json& j, const StabilityReport& v);
void from_json(const json& j, StabilityReport& v);
void to_json(json& j, const SteadyMoments& v);
void from_json(const json& j, SteadyMoments& v);
void to_json(json& j, const GainOptimum& v);
void from_json(const json& j, GainOptimum& v);
void to_json(json& j, const SpectrumSeries& v);
void from_json(const json& j, SpectrumSeries& v);
void to_json(json& j, const SumRuleResult& v);
void from_json(const json& j, SumRuleResult& v);
void to_json(json& j, const Estimate& v);
void from_json(const json& j, Estimate& v);
void to_json(json& j, const TrajectoryEnsembleStats& v);
void from_json(const json& j, TrajectoryEnsembleStats& v);
void to_json(json& j, const PsdComparison& v);
void from_json(const json& j, PsdComparison& v);
void to_json(json& j, const FockMoments& v);
void from_json(const json& j, FockMoments& v);
void to_json(json& j, const FockSolution& v);
void from_json(const json& j, FockSolution& v);

}  // namespace optocool

namespace optocool::cli {

json number_json(double v);
double number_value(const json& j);

/// Shortest representation that parses back to the same double; locale independent.
std::string format_double(double v);

using Cell = std::variant<std::monostate, double, std::uint64_t, bool, std::string>;

/// Row-major table. An empty cell is written as an empty CSV field and as JSON null.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

void write_csv(std::ostream& os, const Table& table);
/// Array of row objects keyed by column name.
json table_json(const Table& table);

/// Two-column (key, value) table of the scalar leaves of a JSON document, with
/// dotted keys; array elements are keyed by index.
Table flatten(const json& doc);

}  // namespace optocool::cli
