#include "report.hpp"

#include <charconv>
#include <cmath>
#include <limits>

#include "optocool/errors.hpp"

namespace optocool::cli {

json number_json(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double number_value(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw ValidationError("json", "expected a number, got " + j.dump());
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

std::string csv_field(const Cell& cell) {
  struct {
    std::string operator()(std::monostate) const { return {}; }
    std::string operator()(double v) const { return format_double(v); }
    std::string operator()(std::uint64_t v) const {
      char buf[32];
      const auto res = std::to_chars(buf, buf + sizeof buf, v);
      return std::string(buf, res.ptr);
    }
    std::string operator()(bool v) const { return v ? "true" : "false"; }
    std::string operator()(const std::string& s) const {
      if (s.find_first_of(",\"\n") == std::string::npos) return s;
      std::string q = "\"";
      for (char c : s) {
        if (c == '"') q += '"';
        q += c;
      }
      return q + "\"";
    }
  } visitor;
  return std::visit(visitor, cell);
}

json cell_json(const Cell& cell) {
  struct {
    json operator()(std::monostate) const { return nullptr; }
    json operator()(double v) const { return number_json(v); }
    json operator()(std::uint64_t v) const { return v; }
    json operator()(bool v) const { return v; }
    json operator()(const std::string& s) const { return s; }
  } visitor;
  return std::visit(visitor, cell);
}

void flatten_into(const json& j, const std::string& key, Table& t) {
  if (j.is_object()) {
    for (const auto& item : j.items())
      flatten_into(item.value(), key.empty() ? item.key() : key + "." + item.key(), t);
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) flatten_into(j[i], key + "." + std::to_string(i), t);
  } else if (j.is_boolean()) {
    t.rows.push_back({key, j.get<bool>()});
  } else if (j.is_number_unsigned()) {
    t.rows.push_back({key, j.get<std::uint64_t>()});
  } else if (j.is_number()) {
    t.rows.push_back({key, j.get<double>()});
  } else if (j.is_string()) {
    t.rows.push_back({key, j.get<std::string>()});
  } else {
    t.rows.push_back({key, std::monostate{}});
  }
}

}  // namespace

void write_csv(std::ostream& os, const Table& table) {
  for (std::size_t c = 0; c < table.columns.size(); ++c)
    os << (c ? "," : "") << csv_field(table.columns[c]);
  os << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << csv_field(row[c]);
    os << '\n';
  }
}

json table_json(const Table& table) {
  json rows = json::array();
  for (const auto& row : table.rows) {
    json obj = json::object();
    for (std::size_t c = 0; c < row.size() && c < table.columns.size(); ++c)
      obj[table.columns[c]] = cell_json(row[c]);
    rows.push_back(std::move(obj));
  }
  return rows;
}

Table flatten(const json& doc) {
  Table t{{"key", "value"}, {}};
  flatten_into(doc, "", t);
  return t;
}

}  // namespace optocool::cli

namespace optocool {

namespace {

using cli::number_json;
using cli::number_value;

double num(const json& j, const char* key) { return number_value(j.at(key)); }

json complex_json(std::complex<double> z) {
  return json::array({number_json(z.real()), number_json(z.imag())});
}

std::complex<double> complex_value(const json& j) {
  if (!j.is_array() || j.size() != 2) throw ValidationError("json", "expected [re, im]");
  return {number_value(j[0]), number_value(j[1])};
}

json vector_json(const std::vector<double>& v) {
  json out = json::array();
  for (double x : v) out.push_back(number_json(x));
  return out;
}

std::vector<double> vector_value(const json& j) {
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& x : j) out.push_back(number_value(x));
  return out;
}

json optional_json(const std::optional<double>& v) { return v ? number_json(*v) : json(nullptr); }

std::optional<double> optional_value(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return number_value(*it);
}

const char* name(MomentMethod m) {
  switch (m) {
    case MomentMethod::closed_form: return "closed_form";
    case MomentMethod::lyapunov: return "lyapunov";
    case MomentMethod::high_gain: return "high_gain";
  }
  return "?";
}

MomentMethod method_value(const std::string& s) {
  if (s == "closed_form") return MomentMethod::closed_form;
  if (s == "lyapunov") return MomentMethod::lyapunov;
  if (s == "high_gain") return MomentMethod::high_gain;
  throw ValidationError("method", "unknown moment method '" + s + "'");
}

}  // namespace

void to_json(json& j, const DerivedCoupling& v) {
  j = {{"omega_m", number_json(v.omega_m)},   {"omega_0", number_json(v.omega_0)},
       {"gamma_b", number_json(v.gamma_b)},   {"G", number_json(v.G)},
       {"beta_in", number_json(v.beta_in)},   {"beta_s", complex_json(v.beta_s)},
       {"varphi", number_json(v.varphi)},     {"chi", number_json(v.chi)},
       {"Gamma", number_json(v.Gamma)},       {"x_s", number_json(v.x_s)},
       {"Q_m", number_json(v.Q_m)},           {"n_bar", number_json(v.n_bar)},
       {"adiabatic", v.adiabatic == AdiabaticRegime::ok ? "ok" : "marginal"}};
}

void from_json(const json& j, DerivedCoupling& v) {
  v.omega_m = num(j, "omega_m");
  v.omega_0 = num(j, "omega_0");
  v.gamma_b = num(j, "gamma_b");
  v.G = num(j, "G");
  v.beta_in = num(j, "beta_in");
  v.beta_s = complex_value(j.at("beta_s"));
  v.varphi = num(j, "varphi");
  v.chi = num(j, "chi");
  v.Gamma = num(j, "Gamma");
  v.x_s = num(j, "x_s");
  v.Q_m = num(j, "Q_m");
  v.n_bar = num(j, "n_bar");
  v.adiabatic = j.at("adiabatic").get<std::string>() == "ok" ? AdiabaticRegime::ok
                                                             : AdiabaticRegime::marginal;
}

void to_json(json& j, const EffectiveBath& v) {
  j = {{"gamma", number_json(v.gamma)},
       {"N", number_json(v.N)},
       {"M", complex_json(v.M)},
       {"squeeze_coeff", number_json(v.squeeze_coeff)},
       {"omega_m", number_json(v.omega_m)},
       {"gamma_m", number_json(v.gamma_m)},
       {"g", number_json(v.g)},
       {"phi", number_json(v.phi)},
       {"Gamma", number_json(v.Gamma)},
       {"eta", number_json(v.eta)},
       {"n_bar", number_json(v.n_bar)},
       {"temperature", number_json(v.temperature)},
       {"from_inputs", v.from_inputs}};
}

void from_json(const json& j, EffectiveBath& v) {
  v.gamma = num(j, "gamma");
  v.N = num(j, "N");
  v.M = complex_value(j.at("M"));
  v.squeeze_coeff = num(j, "squeeze_coeff");
  v.omega_m = num(j, "omega_m");
  v.gamma_m = num(j, "gamma_m");
  v.g = num(j, "g");
  v.phi = num(j, "phi");
  v.Gamma = num(j, "Gamma");
  v.eta = num(j, "eta");
  v.n_bar = num(j, "n_bar");
  v.temperature = num(j, "temperature");
  v.from_inputs = j.at("from_inputs").get<bool>();
}

void to_json(json& j, const StabilityReport& v) {
  j = {{"stable", v.stable},
       {"lindblad_positive", v.lindblad_positive},
       {"margin_damping", number_json(v.margin_damping)},
       {"margin_spring", number_json(v.margin_spring)},
       {"positivity_gap", number_json(v.positivity_gap)}};
}

void from_json(const json& j, StabilityReport& v) {
  v.stable = j.at("stable").get<bool>();
  v.lindblad_positive = j.at("lindblad_positive").get<bool>();
  v.margin_damping = num(j, "margin_damping");
  v.margin_spring = num(j, "margin_spring");
  v.positivity_gap = num(j, "positivity_gap");
}

void to_json(json& j, const SteadyMoments& v) {
  j = {{"method", name(v.method)},
       {"var_x", number_json(v.var_x)},
       {"var_p", optional_json(v.var_p)},
       {"cov_xp_sym", optional_json(v.cov_xp_sym)},
       {"t_eff", number_json(v.t_eff)},
       {"uncertainty_ok", v.uncertainty_ok}};
}

void from_json(const json& j, SteadyMoments& v) {
  v.method = method_value(j.at("method").get<std::string>());
  v.var_x = num(j, "var_x");
  v.var_p = optional_value(j, "var_p");
  v.cov_xp_sym = optional_value(j, "cov_xp_sym");
  v.t_eff = num(j, "t_eff");
  v.uncertainty_ok = j.at("uncertainty_ok").get<bool>();
}

void to_json(json& j, const GainOptimum& v) {
  j = {{"g_opt", number_json(v.g_opt)}, {"var_x_min", number_json(v.var_x_min)}};
}

void from_json(const json& j, GainOptimum& v) {
  v.g_opt = num(j, "g_opt");
  v.var_x_min = num(j, "var_x_min");
}

void to_json(json& j, const SpectrumSeries& v) {
  j = {{"normalization", v.normalization == Normalization::raw ? "raw" : "fig1_scaled"},
       {"omega", vector_json(v.omega_grid)},
       {"values", vector_json(v.values)},
       {"params", v.params_snapshot}};
}

void from_json(const json& j, SpectrumSeries& v) {
  v.normalization = j.at("normalization").get<std::string>() == "raw" ? Normalization::raw
                                                                      : Normalization::fig1_scaled;
  v.omega_grid = vector_value(j.at("omega"));
  v.values = vector_value(j.at("values"));
  v.params_snapshot = j.at("params").get<EffectiveBath>();
}

void to_json(json& j, const SumRuleResult& v) {
  j = {{"integral", number_json(v.integral)},
       {"var_x", number_json(v.var_x)},
       {"rel_err", number_json(v.rel_err)}};
}

void from_json(const json& j, SumRuleResult& v) {
  v.integral = num(j, "integral");
  v.var_x = num(j, "var_x");
  v.rel_err = num(j, "rel_err");
}

void to_json(json& j, const Estimate& v) {
  j = {{"value", number_json(v.value)}, {"std_error", number_json(v.std_error)}};
}

void from_json(const json& j, Estimate& v) {
  v.value = num(j, "value");
  v.std_error = num(j, "std_error");
}

void to_json(json& j, const TrajectoryEnsembleStats& v) {
  j = {{"var_x", v.var_x},
       {"var_p", v.var_p},
       {"cov_xp", v.cov_xp},
       {"psd_integral", v.psd_integral},
       {"n_effective", number_json(v.n_effective)},
       {"n_traj", v.n_traj},
       {"psd", v.psd},
       {"psd_stderr", vector_json(v.psd_stderr)}};
}

void from_json(const json& j, TrajectoryEnsembleStats& v) {
  v.var_x = j.at("var_x").get<Estimate>();
  v.var_p = j.at("var_p").get<Estimate>();
  v.cov_xp = j.at("cov_xp").get<Estimate>();
  v.psd_integral = j.at("psd_integral").get<Estimate>();
  v.n_effective = num(j, "n_effective");
  v.n_traj = j.at("n_traj").get<std::size_t>();
  v.psd = j.at("psd").get<SpectrumSeries>();
  v.psd_stderr = vector_value(j.at("psd_stderr"));
  v.recorded.clear();
}

void to_json(json& j, const PsdComparison& v) {
  j = {{"chi_square", number_json(v.chi_square)},
       {"dof", v.dof},
       {"p_value", number_json(v.p_value)},
       {"peak_max_rel_dev", number_json(v.peak_max_rel_dev)},
       {"passed", v.passed},
       {"omega", vector_json(v.omega)},
       {"z_scores", vector_json(v.z_scores)}};
}

void from_json(const json& j, PsdComparison& v) {
  v.chi_square = num(j, "chi_square");
  v.dof = j.at("dof").get<std::size_t>();
  v.p_value = num(j, "p_value");
  v.peak_max_rel_dev = num(j, "peak_max_rel_dev");
  v.passed = j.at("passed").get<bool>();
  v.omega = vector_value(j.at("omega"));
  v.z_scores = vector_value(j.at("z_scores"));
}

void to_json(json& j, const FockMoments& v) {
  j = {{"a", complex_json(v.a)},
       {"a2", complex_json(v.a2)},
       {"n", number_json(v.n)},
       {"var_x", number_json(v.var_x)},
       {"var_p", number_json(v.var_p)},
       {"cov_xp_sym", number_json(v.cov_xp_sym)}};
}

void from_json(const json& j, FockMoments& v) {
  v.a = complex_value(j.at("a"));
  v.a2 = complex_value(j.at("a2"));
  v.n = num(j, "n");
  v.var_x = num(j, "var_x");
  v.var_p = num(j, "var_p");
  v.cov_xp_sym = num(j, "cov_xp_sym");
}

void to_json(json& j, const FockSolution& v) {
  j = {{"dim", static_cast<std::size_t>(v.rho.rows())},
       {"moments", v.moments},
       {"trace_error", number_json(v.trace_error)},
       {"max_trace_error", number_json(v.max_trace_error)},
       {"max_hermiticity_error", number_json(v.max_hermiticity_error)},
       {"min_eigenvalue", number_json(v.min_eigenvalue)},
       {"tail_population", number_json(v.tail_population)},
       {"t_final", number_json(v.t_final)},
       {"steps", v.steps},
       {"warnings", v.warnings}};
}

void from_json(const json& j, FockSolution& v) {
  v.rho.resize(0, 0);
  v.moments = j.at("moments").get<FockMoments>();
  v.trace_error = num(j, "trace_error");
  v.max_trace_error = num(j, "max_trace_error");
  v.max_hermiticity_error = num(j, "max_hermiticity_error");
  v.min_eigenvalue = num(j, "min_eigenvalue");
  v.tail_population = num(j, "tail_population");
  v.t_final = num(j, "t_final");
  v.steps = j.at("steps").get<std::size_t>();
  v.warnings = j.at("warnings").get<std::vector<std::string>>();
}

}  // namespace optocool
