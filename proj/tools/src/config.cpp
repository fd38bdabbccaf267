#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <numbers>
#include <string_view>

#include "optocool/errors.hpp"

namespace optocool::cli {

using nlohmann::json;

namespace {

constexpr double kMinusHalfPi = -std::numbers::pi / 2.0;

std::string qualify(const std::string& block, std::string_view key) {
  return block.empty() ? std::string(key) : block + "." + std::string(key);
}

void reject_unknown(const json& obj, const std::string& block,
                    std::initializer_list<std::string_view> allowed) {
  for (const auto& item : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end())
      throw ValidationError(qualify(block, item.key()), "unknown key");
  }
}

const json& object_at(const json& doc, const std::string& block) {
  const json& obj = doc.at(block);
  if (!obj.is_object()) throw ValidationError(block, "must be a JSON object");
  return obj;
}

double number(const json& obj, const std::string& block, const char* key,
              std::optional<double> fallback = std::nullopt) {
  const auto it = obj.find(key);
  if (it == obj.end()) {
    if (fallback) return *fallback;
    throw ValidationError(qualify(block, key), "required field missing");
  }
  if (!it->is_number()) throw ValidationError(qualify(block, key), "must be a number");
  return it->get<double>();
}

std::uint64_t count(const json& obj, const std::string& block, const char* key,
                    std::uint64_t fallback) {
  const auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (it->is_number_unsigned()) return it->get<std::uint64_t>();
  if (it->is_number_integer() && it->get<std::int64_t>() >= 0) return it->get<std::uint64_t>();
  throw ValidationError(qualify(block, key), "must be a non-negative integer");
}

std::string text(const json& obj, const std::string& block, const char* key, std::string fallback) {
  const auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_string()) throw ValidationError(qualify(block, key), "must be a string");
  return it->get<std::string>();
}

std::vector<double> numbers(const json& obj, const std::string& block, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end()) return {};
  if (!it->is_array()) throw ValidationError(qualify(block, key), "must be an array of numbers");
  std::vector<double> out;
  for (const auto& v : *it) {
    if (!v.is_number()) throw ValidationError(qualify(block, key), "must be an array of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

// Library validators name bare fields; prefix them with the config block.
template <class F>
void within(const std::string& block, F&& f) {
  try {
    f();
  } catch (const ValidationError& e) {
    const std::string prefix = e.field() + ": ";
    std::string msg = e.what();
    if (msg.rfind(prefix, 0) == 0) msg.erase(0, prefix.size());
    throw ValidationError(qualify(block, e.field()), msg);
  }
}

PhysicalSetup parse_setup(const json& o) {
  const std::string b = "setup";
  reject_unknown(o, b, {"m", "nu_m", "gamma_m", "L", "nu_0", "T_r", "P_in", "T", "eta", "g", "phi",
                        "Delta"});
  PhysicalSetup s;
  s.m = number(o, b, "m");
  s.nu_m = number(o, b, "nu_m");
  s.gamma_m = number(o, b, "gamma_m");
  s.L = number(o, b, "L");
  s.nu_0 = number(o, b, "nu_0");
  s.T_r = number(o, b, "T_r");
  s.P_in = number(o, b, "P_in");
  s.T = number(o, b, "T");
  s.eta = number(o, b, "eta", 1.0);
  s.g = number(o, b, "g", 0.0);
  s.phi = number(o, b, "phi", kMinusHalfPi);
  s.Delta = number(o, b, "Delta", 0.0);
  within(b, [&] { s.validate(); });
  return s;
}

BathInputs parse_inputs(const json& o) {
  const std::string b = "bath_inputs";
  reject_unknown(o, b, {"gamma_m", "omega_m", "n_bar", "Gamma", "eta", "g", "phi", "temperature"});
  BathInputs in;
  in.gamma_m = number(o, b, "gamma_m");
  in.omega_m = number(o, b, "omega_m");
  in.n_bar = number(o, b, "n_bar");
  in.Gamma = number(o, b, "Gamma");
  in.eta = number(o, b, "eta", 1.0);
  in.g = number(o, b, "g", 0.0);
  in.phi = number(o, b, "phi", kMinusHalfPi);
  if (o.contains("temperature")) in.temperature = number(o, b, "temperature");
  within(b, [&] { in.validate(); });
  return in;
}

DirectCoefficients parse_direct(const json& o) {
  const std::string b = "bath_override";
  reject_unknown(o, b, {"gamma", "N", "M", "squeeze_coeff", "omega_m", "gamma_m", "g", "phi"});
  DirectCoefficients d;
  d.gamma = number(o, b, "gamma");
  d.N = number(o, b, "N");
  const auto m = o.find("M");
  if (m == o.end()) throw ValidationError("bath_override.M", "required field missing");
  if (!m->is_array() || m->size() != 2 || !(*m)[0].is_number() || !(*m)[1].is_number())
    throw ValidationError("bath_override.M", "must be [re, im]");
  d.M = {(*m)[0].get<double>(), (*m)[1].get<double>()};
  d.omega_m = number(o, b, "omega_m");
  d.gamma_m = number(o, b, "gamma_m");
  d.g = number(o, b, "g", 0.0);
  d.phi = number(o, b, "phi", kMinusHalfPi);
  d.squeeze_coeff = number(o, b, "squeeze_coeff", (d.g * std::sin(d.phi) + d.gamma_m) / 4.0);
  within(b, [&] { make_direct_bath(d); });
  return d;
}

void apply_sim(const json& o, SimConfig& s) {
  const std::string b = "sim";
  reject_unknown(o, b, {"dt", "t_relax", "t_sample", "n_traj", "seed", "welch_segment",
                        "welch_overlap", "scheme", "threads"});
  s.dt = number(o, b, "dt", s.dt);
  s.t_relax = number(o, b, "t_relax", s.t_relax);
  s.t_sample = number(o, b, "t_sample", s.t_sample);
  s.n_traj = count(o, b, "n_traj", s.n_traj);
  s.seed = count(o, b, "seed", s.seed);
  s.welch_segment = count(o, b, "welch_segment", s.welch_segment);
  s.welch_overlap = number(o, b, "welch_overlap", s.welch_overlap);
  s.threads = static_cast<unsigned>(count(o, b, "threads", s.threads));
  const std::string scheme = text(o, b, "scheme", s.scheme == Discretization::exact ? "exact" : "euler");
  if (scheme == "exact")
    s.scheme = Discretization::exact;
  else if (scheme == "euler")
    s.scheme = Discretization::euler;
  else
    throw ValidationError("sim.scheme", "must be \"exact\" or \"euler\"");
}

FockOptions parse_fock(const json& o) {
  const std::string b = "fock";
  reject_unknown(o, b, {"dim", "dt", "t_final", "tol", "rtol", "atol", "max_steps", "n_bar_ceiling",
                        "dim_ceiling", "dump"});
  FockOptions f;
  f.dim_given = o.contains("dim");
  f.config.dim = count(o, b, "dim", f.config.dim);
  f.config.dt = number(o, b, "dt", f.config.dt);
  f.config.t_final = number(o, b, "t_final", f.config.t_final);
  f.config.tol = number(o, b, "tol", f.config.tol);
  f.config.rtol = number(o, b, "rtol", f.config.rtol);
  f.config.atol = number(o, b, "atol", f.config.atol);
  f.config.max_steps = count(o, b, "max_steps", f.config.max_steps);
  f.n_bar_ceiling = number(o, b, "n_bar_ceiling", f.n_bar_ceiling);
  f.dim_ceiling = count(o, b, "dim_ceiling", f.dim_ceiling);
  f.dump = text(o, b, "dump", "");
  within(b, [&] { f.config.validate(); });
  if (!(f.n_bar_ceiling > 0.0)) throw ValidationError("fock.n_bar_ceiling", "must be positive");
  return f;
}

}  // namespace

RunConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw ValidationError("config", "top level must be a JSON object");
  reject_unknown(doc, "", {"description", "setup", "bath_inputs", "bath_override", "unsafe_constants",
                           "grid", "sim", "fock", "sweep", "compare", "output"});
  RunConfig cfg;

  const int sources = int(doc.contains("setup")) + int(doc.contains("bath_inputs")) +
                      int(doc.contains("bath_override"));
  if (sources != 1)
    throw ValidationError("config",
                          sources == 0 ? "one of setup, bath_inputs, bath_override is required"
                                       : "setup, bath_inputs and bath_override are mutually exclusive");

  if (doc.contains("unsafe_constants")) {
    const json& o = object_at(doc, "unsafe_constants");
    reject_unknown(o, "unsafe_constants", {"hbar", "k_B", "c"});
    cfg.constants.hbar = number(o, "unsafe_constants", "hbar", cfg.constants.hbar);
    cfg.constants.k_B = number(o, "unsafe_constants", "k_B", cfg.constants.k_B);
    cfg.constants.c = number(o, "unsafe_constants", "c", cfg.constants.c);
    within("unsafe_constants", [&] { cfg.constants.validate(); });
    cfg.unsafe_constants = true;
  }

  if (doc.contains("setup")) {
    cfg.source = BathSource::setup;
    cfg.setup = parse_setup(object_at(doc, "setup"));
  } else if (doc.contains("bath_inputs")) {
    cfg.source = BathSource::bath_inputs;
    cfg.inputs = parse_inputs(object_at(doc, "bath_inputs"));
    // The library infers T from n_bar with CODATA constants; keep overrides consistent.
    if (cfg.unsafe_constants && !cfg.inputs.temperature)
      cfg.inputs.temperature =
          cfg.inputs.n_bar * cfg.constants.hbar * cfg.inputs.omega_m / cfg.constants.k_B;
  } else {
    cfg.source = BathSource::bath_override;
    cfg.direct = parse_direct(object_at(doc, "bath_override"));
  }

  if (doc.contains("grid")) {
    const json& o = object_at(doc, "grid");
    reject_unknown(o, "grid", {"omega_min", "omega_max", "points"});
    if (o.contains("omega_min")) cfg.grid.omega_min = number(o, "grid", "omega_min");
    if (o.contains("omega_max")) cfg.grid.omega_max = number(o, "grid", "omega_max");
    cfg.grid.points = count(o, "grid", "points", 0);
    if (cfg.grid.points == 1) throw ValidationError("grid.points", "need at least 2 points");
  }

  if (doc.contains("sim")) {
    cfg.sim = object_at(doc, "sim");
    SimConfig probe;
    apply_sim(cfg.sim, probe);
  }

  if (doc.contains("fock")) cfg.fock = parse_fock(object_at(doc, "fock"));

  if (doc.contains("sweep")) {
    const json& o = object_at(doc, "sweep");
    reject_unknown(o, "sweep", {"g", "phi", "Gamma", "eta", "T"});
    cfg.sweep.g = numbers(o, "sweep", "g");
    cfg.sweep.phi = numbers(o, "sweep", "phi");
    cfg.sweep.Gamma = numbers(o, "sweep", "Gamma");
    cfg.sweep.eta = numbers(o, "sweep", "eta");
    cfg.sweep.T = numbers(o, "sweep", "T");
  }

  if (doc.contains("compare")) {
    const json& o = object_at(doc, "compare");
    reject_unknown(o, "compare", {"stats"});
    cfg.compare_stats = text(o, "compare", "stats", "");
  }

  if (doc.contains("output")) {
    const json& o = object_at(doc, "output");
    reject_unknown(o, "output", {"path", "format"});
    cfg.out = text(o, "output", "path", "");
    const std::string fmt = text(o, "output", "format", "json");
    if (fmt == "json")
      cfg.format = OutputFormat::json;
    else if (fmt == "csv")
      cfg.format = OutputFormat::csv;
    else
      throw ValidationError("output.format", "must be \"csv\" or \"json\"");
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config", "cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("config", path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(doc);
}

std::optional<DerivedCoupling> make_coupling(const RunConfig& cfg, const Point& at) {
  if (cfg.source != BathSource::setup) return std::nullopt;
  PhysicalSetup s = cfg.setup;
  if (at.g) s.g = *at.g;
  if (at.phi) s.phi = *at.phi;
  if (at.eta) s.eta = *at.eta;
  if (at.T) s.T = *at.T;
  DerivedCoupling d = derive_coupling(s, cfg.constants);
  if (at.Gamma) d.Gamma = *at.Gamma;
  return d;
}

EffectiveBath make_bath(const RunConfig& cfg, const Point& at) {
  switch (cfg.source) {
    case BathSource::setup: {
      PhysicalSetup s = cfg.setup;
      if (at.g) s.g = *at.g;
      if (at.phi) s.phi = *at.phi;
      if (at.eta) s.eta = *at.eta;
      if (at.T) s.T = *at.T;
      return build_bath(*make_coupling(cfg, at), s);
    }
    case BathSource::bath_inputs: {
      BathInputs in = cfg.inputs;
      if (at.g) in.g = *at.g;
      if (at.phi) in.phi = *at.phi;
      if (at.eta) in.eta = *at.eta;
      if (at.Gamma) in.Gamma = *at.Gamma;
      if (at.T) {
        in.n_bar = cfg.constants.k_B * *at.T / (cfg.constants.hbar * in.omega_m);
        in.temperature = *at.T;
      }
      return build_bath(in);
    }
    case BathSource::bath_override:
      if (at.g || at.phi || at.eta || at.Gamma || at.T)
        throw ValidationError("bath_override",
                              "coefficients are fixed; sweeps and --g-list need setup or bath_inputs");
      return make_direct_bath(cfg.direct);
  }
  throw ValidationError("config", "unknown bath source");
}

SimConfig make_sim_config(const RunConfig& cfg, const EffectiveBath& bath) {
  SimConfig s = recommended_config(bath);
  apply_sim(cfg.sim, s);
  if (cfg.seed) s.seed = *cfg.seed;
  return s;
}

std::vector<double> parse_number_list(const std::string& list, const std::string& field) {
  std::vector<double> out;
  std::string_view rest(list);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    std::string_view item = rest.substr(0, comma);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    double v = 0.0;
    const auto [end, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || ec != std::errc{} || end != item.data() + item.size())
      throw ValidationError(field, "cannot parse '" + std::string(item) + "' as a number");
    out.push_back(v);
    rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
  }
  if (out.empty()) throw ValidationError(field, "empty list");
  return out;
}

}  // namespace optocool::cli
