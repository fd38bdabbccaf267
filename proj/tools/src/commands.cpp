#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <iostream>
#include <thread>

#include "CLI11.hpp"

#include "optocool/errors.hpp"
#include "optocool/spectrum.hpp"
#include "optocool/steady_state.hpp"
#include "report.hpp"

namespace optocool::cli {

namespace {

const char* source_name(BathSource s) {
  switch (s) {
    case BathSource::setup: return "setup";
    case BathSource::bath_inputs: return "bath_inputs";
    case BathSource::bath_override: return "bath_override";
  }
  return "?";
}

std::filesystem::path sibling(const std::string& out, const char* suffix) {
  return std::filesystem::path(out).replace_extension(suffix);
}

void write_file(const std::filesystem::path& path, const std::function<void(std::ostream&)>& write) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError("out", "cannot open " + path.string() + " for writing");
  write(f);
  f.flush();
  if (!f) throw ValidationError("out", "write to " + path.string() + " failed");
}

void emit(const RunConfig& cfg, std::ostream& os, const std::function<void(std::ostream&)>& write) {
  if (cfg.out.empty())
    write(os);
  else
    write_file(cfg.out, write);
}

// JSON documents as indented JSON, or as the given table in CSV mode.
void emit_doc(const RunConfig& cfg, std::ostream& os, const json& doc, const Table& csv) {
  emit(cfg, os, [&](std::ostream& s) {
    if (cfg.format == OutputFormat::json)
      s << doc.dump(2) << '\n';
    else
      write_csv(s, csv);
  });
}

void emit_doc(const RunConfig& cfg, std::ostream& os, const json& doc) {
  emit_doc(cfg, os, doc, cfg.format == OutputFormat::csv ? flatten(doc) : Table{});
}

constexpr double kPeakTolerance = 0.1;  // relative, over the peak region

// Drops numeric array members, leaving the scalar summary of a document.
json scalars(const json& doc) {
  if (doc.is_array()) {
    json out = json::array();
    for (const auto& v : doc) out.push_back(scalars(v));
    return out;
  }
  if (!doc.is_object()) return doc;
  json out = json::object();
  for (const auto& item : doc.items()) {
    const json& v = item.value();
    if (v.is_array() && v.size() > 2 && !v.front().is_object()) continue;
    out[item.key()] = scalars(item.value());
  }
  return out;
}

/// Points for --g-list, or the configured point.
std::vector<Point> gain_points(const RunConfig& cfg) {
  std::vector<Point> pts;
  for (double g : cfg.g_list) pts.push_back({.g = g});
  if (pts.empty()) pts.emplace_back();
  return pts;
}

bool closed_form_applies(const EffectiveBath& b) { return b.from_inputs && is_minus_half_pi(b.phi); }

/// Coordinates of the configured point on every sweep axis.
struct Coordinates {
  double g = 0.0, phi = 0.0, Gamma = 0.0, eta = 1.0, T = 0.0;
};

Coordinates configured(const RunConfig& cfg) {
  switch (cfg.source) {
    case BathSource::setup: {
      const DerivedCoupling d = *make_coupling(cfg);
      return {cfg.setup.g, cfg.setup.phi, d.Gamma, cfg.setup.eta, cfg.setup.T};
    }
    case BathSource::bath_inputs: {
      const BathInputs& in = cfg.inputs;
      const double T = in.temperature ? *in.temperature
                                      : in.n_bar * PhysicalConstants{}.hbar * in.omega_m /
                                            PhysicalConstants{}.k_B;
      return {in.g, in.phi, in.Gamma, in.eta, T};
    }
    case BathSource::bath_override:
      return {cfg.direct.g, cfg.direct.phi, 0.0, 1.0, 0.0};
  }
  return {};
}

/// Stability margins for a point whose bath could not be built (gamma <= 0).
StabilityReport margins_only(const RunConfig& cfg, const Point& at) {
  const Coordinates c = configured(cfg);
  const double g = at.g.value_or(c.g);
  const double phi = at.phi.value_or(c.phi);
  double omega_m = 0.0, gamma_m = 0.0;
  if (cfg.source == BathSource::setup) {
    omega_m = make_coupling(cfg, at)->omega_m;
    gamma_m = cfg.setup.gamma_m;
  } else if (cfg.source == BathSource::bath_inputs) {
    omega_m = cfg.inputs.omega_m;
    gamma_m = cfg.inputs.gamma_m;
  } else {
    omega_m = cfg.direct.omega_m;
    gamma_m = cfg.direct.gamma_m;
  }
  StabilityReport r;
  r.stable = false;
  r.lindblad_positive = false;
  r.margin_damping = gamma_m - g * std::sin(phi);
  r.margin_spring = omega_m * omega_m - gamma_m * g * std::sin(phi);
  r.positivity_gap = std::nan("");
  return r;
}

std::string series_name(double g) { return "S_g" + format_double(g); }

std::vector<double> spectrum_grid(const RunConfig& cfg, const std::vector<EffectiveBath>& baths) {
  const GridOptions& gs = cfg.grid;
  if (cfg.fig1) {
    return uniform_grid(gs.omega_min.value_or(0.0), gs.omega_max.value_or(500.0),
                        gs.points ? gs.points : 5001);
  }
  const std::size_t points = gs.points ? gs.points : 4096;
  if (gs.omega_max) return uniform_grid(gs.omega_min.value_or(-*gs.omega_max), *gs.omega_max, points);
  if (baths.size() == 1 && !gs.omega_min) return default_grid(baths.front(), points);
  double reach = 0.0;
  for (const auto& b : baths) reach = std::max(reach, 5.0 * (b.omega_m + b.g));
  return uniform_grid(gs.omega_min.value_or(-reach), reach, points);
}

}  // namespace

void cmd_derive(const RunConfig& cfg, std::ostream& os) {
  auto point_doc = [&](const Point& at) {
    json j = json::object();
    if (at.g) j["g"] = number_json(*at.g);
    if (auto d = make_coupling(cfg, at)) j["coupling"] = *d;
    try {
      const EffectiveBath b = make_bath(cfg, at);
      j["bath"] = b;
      j["stability"] = check_stability(b);
    } catch (const UnstableBathError& e) {
      j["bath"] = nullptr;
      j["bath_error"] = e.what();
      j["stability"] = margins_only(cfg, at);
    }
    return j;
  };

  json doc = {{"source", source_name(cfg.source)}};
  if (cfg.unsafe_constants)
    doc["unsafe_constants"] = {{"hbar", number_json(cfg.constants.hbar)},
                               {"k_B", number_json(cfg.constants.k_B)},
                               {"c", number_json(cfg.constants.c)}};
  if (cfg.g_list.empty()) {
    doc.update(point_doc({}));
  } else {
    doc["points"] = json::array();
    for (const Point& p : gain_points(cfg)) doc["points"].push_back(point_doc(p));
  }
  emit_doc(cfg, os, doc);
}

void cmd_variance(const RunConfig& cfg, std::ostream& os) {
  Table t{{"g", "method", "var_x", "var_p", "cov_xp_sym", "t_eff", "uncertainty_ok"}, {}};
  auto add = [&](double g, const SteadyMoments& m) {
    auto opt = [](const std::optional<double>& v) { return v ? Cell{*v} : Cell{}; };
    t.rows.push_back({g, std::string(m.method == MomentMethod::closed_form ? "closed_form"
                                     : m.method == MomentMethod::lyapunov  ? "lyapunov"
                                                                           : "high_gain"),
                      m.var_x, opt(m.var_p), opt(m.cov_xp_sym), m.t_eff, m.uncertainty_ok});
  };
  for (const Point& p : gain_points(cfg)) {
    const EffectiveBath b = make_bath(cfg, p);
    if (closed_form_applies(b)) add(b.g, closed_form_moments(b));
    add(b.g, lyapunov_moments(b));
    if (closed_form_applies(b) && b.g > 0.0) add(b.g, high_gain_moments(b));
  }
  emit_doc(cfg, os, {{"source", source_name(cfg.source)}, {"rows", table_json(t)}}, t);
}

void cmd_spectrum(const RunConfig& cfg, std::ostream& os) {
  std::vector<Point> pts = gain_points(cfg);
  if (cfg.fig1 && cfg.g_list.empty()) {
    pts.clear();
    for (double g : {0.0, 1.0, 10.0, 100.0, 1000.0}) pts.push_back({.g = g});
  }
  std::vector<EffectiveBath> baths;
  for (const Point& p : pts) baths.push_back(make_bath(cfg, p));
  const std::vector<double> grid = spectrum_grid(cfg, baths);

  double var_x_g0 = 0.0;
  if (cfg.fig1) var_x_g0 = closed_form_moments(make_bath(cfg, {.g = 0.0})).var_x;

  Table t{{"omega"}, {}};
  Table sums{{"g", "integral", "var_x", "rel_err"}, {}};
  json series = json::object();
  std::vector<std::vector<double>> columns;
  for (const EffectiveBath& b : baths) {
    SpectrumSeries s = eval_spectrum(b, grid);
    if (cfg.fig1) s = fig1_scale(s, var_x_g0);
    const SumRuleResult r = sum_rule_check(b);
    sums.rows.push_back({b.g, r.integral, r.var_x, r.rel_err});
    t.columns.push_back(series_name(b.g));
    series[series_name(b.g)] = s.values;
    columns.push_back(std::move(s.values));
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    std::vector<Cell> row{grid[i]};
    for (const auto& c : columns) row.emplace_back(c[i]);
    t.rows.push_back(std::move(row));
  }

  if (cfg.format == OutputFormat::csv) {
    emit(cfg, os, [&](std::ostream& s) { write_csv(s, t); });
    if (!cfg.out.empty())
      write_file(sibling(cfg.out, ".sumrule.csv"), [&](std::ostream& s) { write_csv(s, sums); });
    return;
  }
  json doc = {{"normalization", cfg.fig1 ? "fig1_scaled" : "raw"},
              {"omega", grid},
              {"series", series},
              {"sum_rule", table_json(sums)}};
  if (cfg.fig1) doc["var_x_g0"] = number_json(var_x_g0);
  emit(cfg, os, [&](std::ostream& s) { s << doc.dump(2) << '\n'; });
}

namespace {

json sim_json(const SimConfig& s) {
  return {{"seed", s.seed},
          {"dt", number_json(s.dt)},
          {"t_relax", number_json(s.t_relax)},
          {"t_sample", number_json(s.t_sample)},
          {"n_traj", s.n_traj},
          {"welch_segment", s.welch_segment},
          {"welch_overlap", number_json(s.welch_overlap)},
          {"scheme", s.scheme == Discretization::exact ? "exact" : "euler"}};
}

}  // namespace

void cmd_simulate(const RunConfig& cfg, std::ostream& os) {
  if (cfg.out.empty())
    throw ValidationError("out", "simulate writes a stats file and a PSD table; --out is required");
  const EffectiveBath b = make_bath(cfg);
  const SimConfig sim = make_sim_config(cfg, b);
  const TrajectoryEnsembleStats stats = simulate(b, sim);

  const json doc = {{"sim", sim_json(sim)}, {"bath", b}, {"stats", stats}};
  emit_doc(cfg, os, doc, cfg.format == OutputFormat::csv ? flatten(scalars(doc)) : Table{});

  Table psd{{"omega", "psd", "psd_stderr"}, {}};
  for (std::size_t i = 0; i < stats.psd.omega_grid.size(); ++i)
    psd.rows.push_back({stats.psd.omega_grid[i], stats.psd.values[i], stats.psd_stderr[i]});
  write_file(sibling(cfg.out, ".psd.csv"), [&](std::ostream& s) { write_csv(s, psd); });
}

void cmd_compare(const RunConfig& cfg, std::ostream& os) {
  const EffectiveBath b = make_bath(cfg);
  TrajectoryEnsembleStats stats;
  json origin;
  if (!cfg.compare_stats.empty()) {
    std::ifstream in(cfg.compare_stats);
    if (!in) throw ValidationError("compare.stats", "cannot open " + cfg.compare_stats);
    json doc;
    try {
      doc = json::parse(in);
      stats = doc.at("stats").get<TrajectoryEnsembleStats>();
    } catch (const json::exception& e) {
      throw ValidationError("compare.stats", cfg.compare_stats + " is not a stats document: " + e.what());
    }
    origin = {{"stats_file", cfg.compare_stats}, {"sim", doc.value("sim", json(nullptr))}};
  } else {
    const SimConfig sim = make_sim_config(cfg, b);
    stats = simulate(b, sim);
    origin = {{"sim", sim_json(sim)}};
  }

  const SteadyMoments ref = closed_form_applies(b) ? closed_form_moments(b) : lyapunov_moments(b);
  Table t{{"quantity", "simulated", "std_error", "analytic", "z"}, {}};
  bool agree = true;
  auto add = [&](const char* q, const Estimate& e, double analytic) {
    const double z = (e.value - analytic) / e.std_error;
    agree = agree && std::abs(z) <= 3.0;
    t.rows.push_back({std::string(q), e.value, e.std_error, analytic, z});
  };
  add("var_x", stats.var_x, ref.var_x);
  add("var_p", stats.var_p, *ref.var_p);
  add("cov_xp", stats.cov_xp, *ref.cov_xp_sym);

  json doc = {{"analytic_method", ref.method == MomentMethod::closed_form ? "closed_form" : "lyapunov"},
              {"origin", origin},
              {"moments", table_json(t)}};
  if (is_minus_half_pi(b.phi)) {
    // Aliasing lifts the sampled PSD near Nyquist and Welch leakage biases the
    // peak by a few percent, so the per-bin chi-square rejects once the
    // ensemble is large. It is reported; the verdict uses the peak deviation.
    const double nyquist = stats.psd.omega_grid.empty() ? 0.0 : stats.psd.omega_grid.back();
    PsdComparisonOptions opts;
    opts.omega_max = std::min(5.0 * (b.omega_m + b.g), 0.5 * nyquist);
    const SpectrumSeries analytic = eval_spectrum(b, stats.psd.omega_grid);
    const PsdComparison c = psd_vs_analytic(stats, analytic, opts);
    agree = agree && c.peak_max_rel_dev < kPeakTolerance;
    doc["psd"] = c;
    doc["psd"]["omega_max"] = number_json(opts.omega_max);
    doc["psd"]["peak_tolerance"] = number_json(kPeakTolerance);
  }
  doc["agree"] = agree;
  emit_doc(cfg, os, doc, cfg.format == OutputFormat::csv ? flatten(scalars(doc)) : Table{});
}

void cmd_fock(const RunConfig& cfg, std::ostream& os) {
  const FockOptions& opts = cfg.fock;
  const EffectiveBath b = make_bath(cfg);
  if (b.n_bar > opts.n_bar_ceiling)
    throw ValidationError("fock.n_bar_ceiling",
                          "n_bar = " + format_double(b.n_bar) + " exceeds the ceiling " +
                              format_double(opts.n_bar_ceiling) +
                              "; the Fock solver is for desk-scale baths");

  // Truncation estimate: the initial thermal state, and a thermal state as wide
  // as the broader steady-state quadrature (squeezing fattens the tail).
  const SteadyMoments ref = lyapunov_moments(b);
  const double n0 = b.n_bar > 0.0 ? 1.0 / std::expm1(1.0 / b.n_bar) : 0.0;
  const double n_wide = std::max(0.0, 2.0 * std::max(ref.var_x, *ref.var_p) - 0.5);
  const std::size_t need = required_dim(std::max(n0, n_wide));
  FockConfig fc = opts.config;
  if (!opts.dim_given) fc.dim = need;
  if (fc.dim > opts.dim_ceiling || need > opts.dim_ceiling)
    throw ValidationError("fock.dim_ceiling",
                          "truncation " + std::to_string(std::max(fc.dim, need)) +
                              " (estimated need " + std::to_string(need) + ") exceeds the ceiling " +
                              std::to_string(opts.dim_ceiling));

  const MasterEquationGenerator gen = build_generator(b, fc.dim);
  const DensityMatrix rho0 = b.n_bar > 0.0 ? thermal_state(b.n_bar, fc.dim) : fock_state(0, fc.dim);
  const FockSolution sol = evolve_to_steady(gen, fc, rho0);

  json doc = {{"bath", b},
              {"dim", fc.dim},
              {"estimated_dim", need},
              {"lindblad_positive", gen.lindblad_positive()},
              {"solution", sol},
              {"lyapunov", ref}};
  if (closed_form_applies(b)) doc["closed_form"] = closed_form_moments(b);
  emit_doc(cfg, os, doc);

  if (!opts.dump.empty()) {
    write_file(opts.dump, [&](std::ostream& s) {
      for (Eigen::Index i = 0; i < sol.rho.rows(); ++i)
        for (Eigen::Index j = 0; j < sol.rho.cols(); ++j) {
          const double re = sol.rho(i, j).real(), im = sol.rho(i, j).imag();
          s.write(reinterpret_cast<const char*>(&re), sizeof re);
          s.write(reinterpret_cast<const char*>(&im), sizeof im);
        }
    });
  }
}

void cmd_sweep(const RunConfig& cfg, std::ostream& os) {
  const Coordinates base = configured(cfg);
  auto axis = [](const std::vector<double>& values) {
    std::vector<std::optional<double>> out(values.begin(), values.end());
    if (out.empty()) out.emplace_back();
    return out;
  };
  const auto ag = axis(cfg.g_list.empty() ? cfg.sweep.g : cfg.g_list);
  const auto aphi = axis(cfg.sweep.phi), aG = axis(cfg.sweep.Gamma), aeta = axis(cfg.sweep.eta),
             aT = axis(cfg.sweep.T);

  std::vector<Point> pts;
  for (const auto& g : ag)
    for (const auto& phi : aphi)
      for (const auto& G : aG)
        for (const auto& eta : aeta)
          for (const auto& T : aT) pts.push_back({g, phi, G, eta, T});

  Table t{{"index", "g", "phi", "Gamma", "eta", "T", "n_bar", "stable", "lindblad_positive",
           "positivity_gap", "var_x", "var_p", "t_eff", "method"},
          {}};
  t.rows.resize(pts.size());
  std::vector<std::exception_ptr> errors(pts.size());

  auto evaluate = [&](std::size_t i) {
    const Point& p = pts[i];
    std::vector<Cell> row{std::uint64_t{i},     p.g.value_or(base.g),   p.phi.value_or(base.phi),
                          p.Gamma.value_or(base.Gamma), p.eta.value_or(base.eta), p.T.value_or(base.T)};
    try {
      const EffectiveBath b = make_bath(cfg, p);
      const StabilityReport s = check_stability(b);
      row.insert(row.end(), {b.n_bar, s.stable, s.lindblad_positive, s.positivity_gap});
      if (s.stable) {
        const SteadyMoments m = closed_form_applies(b) ? closed_form_moments(b) : lyapunov_moments(b);
        row.insert(row.end(), {m.var_x, *m.var_p, m.t_eff,
                               std::string(m.method == MomentMethod::closed_form ? "closed_form"
                                                                                 : "lyapunov")});
      } else {
        row.insert(row.end(), {Cell{}, Cell{}, Cell{}, Cell{}});
      }
    } catch (const UnstableBathError&) {
      row.insert(row.end(), {Cell{}, false, false, Cell{}, Cell{}, Cell{}, Cell{}, Cell{}});
    }
    t.rows[i] = std::move(row);
  };

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < pts.size();) {
      try {
        evaluate(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n_workers =
      std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()), pts.size());
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
    worker();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  json doc = {{"source", source_name(cfg.source)}, {"rows", table_json(t)}};

  // A pure gain sweep at phi = -pi/2 is cross-checked against the optimizer.
  const bool gain_only = ag.size() >= 3 && aphi.size() == 1 && aG.size() == 1 && aeta.size() == 1 &&
                         aT.size() == 1;
  if (gain_only) {
    const EffectiveBath b = make_bath(cfg, {.g = ag.front(), .phi = aphi[0], .Gamma = aG[0],
                                            .eta = aeta[0], .T = aT[0]});
    if (closed_form_applies(b)) {
      auto [lo, hi] = std::minmax_element(ag.begin(), ag.end());
      const GainOptimum opt = optimize_gain(b, **lo, **hi);
      std::size_t best = 0;
      double best_var = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const double* v = std::get_if<double>(&t.rows[i][10]);
        if (v && *v < best_var) best_var = *v, best = i;
      }
      doc["optimum"] = {{"optimizer", opt},
                        {"grid_g", number_json(std::get<double>(t.rows[best][1]))},
                        {"grid_var_x", number_json(best_var)}};
    }
  }
  emit_doc(cfg, os, doc, t);
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Feedback cooling of a mirror: derived parameters, moments, spectra, simulation"};
  app.require_subcommand(1);

  std::string config_path, out_path, format, g_list;
  std::uint64_t seed = 0;
  std::vector<CLI::Option*> seed_options;
  bool fig1 = false;

  using Command = void (*)(const RunConfig&, std::ostream&);
  struct Verb {
    const char* name;
    const char* help;
    Command fn;
    bool gains, seeded;
  };
  const Verb verbs[] = {
      {"derive", "Derived coupling, effective bath and stability report", cmd_derive, true, false},
      {"variance", "Steady-state quadrature variances by each method", cmd_variance, true, false},
      {"spectrum", "Position spectrum series with a sum-rule check", cmd_spectrum, true, false},
      {"simulate", "Monte Carlo ensemble: stats document and PSD table", cmd_simulate, false, true},
      {"fock", "Steady state of the truncated master equation", cmd_fock, false, false},
      {"sweep", "Cartesian parameter sweep, one row per point", cmd_sweep, true, false},
      {"compare", "Simulated moments and PSD against analytic values", cmd_compare, false, true},
  };
  std::vector<std::pair<CLI::App*, Command>> subs;
  for (const Verb& v : verbs) {
    CLI::App* sub = app.add_subcommand(v.name, v.help);
    sub->add_option("--config", config_path, "JSON config")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_path, "Output path (default: stdout)");
    sub->add_option("--format", format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    if (v.seeded) seed_options.push_back(sub->add_option("--seed", seed, "Random seed (overrides sim.seed)"));
    if (v.gains) sub->add_option("--g-list", g_list, "Comma-separated feedback gains");
    if (std::string(v.name) == "spectrum")
      sub->add_flag("--fig1", fig1, "Scale by 2 pi <X^2>_{g=0} on [0, 500]; gains 0,1,10,100,1000");
    subs.emplace_back(sub, v.fn);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  try {
    RunConfig cfg = load_config(config_path);
    if (!out_path.empty()) cfg.out = out_path;
    if (!format.empty()) cfg.format = format == "csv" ? OutputFormat::csv : OutputFormat::json;
    for (const CLI::Option* o : seed_options)
      if (o->count() > 0) cfg.seed = seed;
    if (!g_list.empty()) cfg.g_list = parse_number_list(g_list, "--g-list");
    cfg.fig1 = fig1;
    for (const auto& [sub, fn] : subs)
      if (sub->parsed()) fn(cfg, out);
    return 0;
  } catch (const Error& e) {
    switch (e.kind()) {
      case ErrorKind::validation:
        err << "optocool: invalid input: " << e.what() << '\n';
        return 2;
      case ErrorKind::instability:
        err << "optocool: unstable parameters: " << e.what() << '\n';
        return 3;
      case ErrorKind::numerical:
        err << "optocool: numerical failure: " << e.what() << '\n';
        return 4;
    }
  } catch (const std::exception& e) {
    err << "optocool: " << e.what() << '\n';
  }
  return 1;
}

}  // namespace optocool::cli
