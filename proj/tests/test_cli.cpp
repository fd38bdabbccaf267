#include <gtest/gtest.h>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <locale>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "config.hpp"
#include "optocool/errors.hpp"
#include "report.hpp"

using namespace optocool;
using namespace optocool::cli;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = OPTOCOOL_CONFIG_DIR;
constexpr double kHalfPi = std::numbers::pi / 2.0;

struct Result {
  int code;
  std::string out, err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "optocool");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::path(testing::TempDir()) / "optocool_cli";
  fs::create_directories(dir);
  return dir / name;
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

fs::path write_config(const std::string& name, const json& doc) {
  const fs::path p = scratch(name);
  std::ofstream(p) << doc.dump(2);
  return p;
}

json reference() { return read_json(kConfigs / "reference.json"); }

struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  double num(std::size_t r, const std::string& col) const {
    const auto c = std::find(header.begin(), header.end(), col) - header.begin();
    const std::string& s = rows.at(r).at(c);
    double v = 0.0;
    std::from_chars(s.data(), s.data() + s.size(), v);
    return v;
  }
};

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  for (std::string f; std::getline(ss, f, ',');) out.push_back(f);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

Csv parse_csv(const std::string& text) {
  Csv c;
  std::stringstream ss(text);
  std::string line;
  std::getline(ss, line);
  c.header = split(line);
  while (std::getline(ss, line)) c.rows.push_back(split(line));
  return c;
}

json small_mc() {
  json doc = read_json(kConfigs / "desk_mc.json");
  doc["sim"] = {{"n_traj", 8}, {"t_sample", 2.0}, {"welch_segment", 256}, {"seed", 99}};
  return doc;
}

}  // namespace

TEST(Derive, ReferenceConfigGivesMeasurementRateAndCoupling) {
  const Result r = invoke({"derive", "--config", (kConfigs / "reference.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const json doc = json::parse(r.out);
  const double Gamma = doc["coupling"]["Gamma"].get<double>();
  const double chi = std::abs(doc["coupling"]["chi"].get<double>());
  EXPECT_GE(Gamma, 180.0);
  EXPECT_LE(Gamma, 230.0);
  EXPECT_GE(chi, 1.0e4);
  EXPECT_LE(chi, 1.4e4);
  EXPECT_TRUE(doc["stability"]["stable"].get<bool>());
  EXPECT_EQ(doc["source"], "setup");
}

TEST(Derive, UnstablePointIsReportedWithExitZero) {
  json doc = reference();
  doc["setup"]["phi"] = kHalfPi;
  doc["setup"]["g"] = 2.0 * doc["setup"]["gamma_m"].get<double>();
  const Result r = invoke({"derive", "--config", write_config("unstable.json", doc).string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const json rep = json::parse(r.out);
  EXPECT_FALSE(rep["stability"]["stable"].get<bool>());
  EXPECT_DOUBLE_EQ(rep["stability"]["margin_damping"].get<double>(), -1.0);
  EXPECT_TRUE(rep["bath"].is_null());
}

TEST(Derive, MissingMassIsValidationError) {
  json doc = reference();
  doc["setup"].erase("m");
  const Result r = invoke({"derive", "--config", write_config("nomass.json", doc).string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("setup.m"), std::string::npos) << r.err;
}

TEST(Derive, GainListGivesOnePointPerGain) {
  const Result r = invoke({"derive", "--config", (kConfigs / "reference.json").string(), "--g-list", "0, 10,1e3"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json doc = json::parse(r.out);
  ASSERT_EQ(doc["points"].size(), 3u);
  EXPECT_EQ(doc["points"][2]["bath"]["g"].get<double>(), 1000.0);
}

TEST(Derive, UnsafeConstantsRescaleOccupation) {
  json doc = reference();
  doc["unsafe_constants"] = {{"hbar", 1.0}, {"k_B", 1.0}};
  const Result r = invoke({"derive", "--config", write_config("units.json", doc).string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const json rep = json::parse(r.out);
  const double omega_m = 2.0 * std::numbers::pi * 10.0;
  EXPECT_NEAR(rep["bath"]["n_bar"].get<double>(), 300.0 / omega_m, 1e-12);
  EXPECT_EQ(rep["unsafe_constants"]["hbar"].get<double>(), 1.0);
}

TEST(Config, Rejections) {
  struct Case {
    const char* name;
    json doc;
    const char* field;
  };
  json mixed = reference();
  mixed["bath_inputs"] = {{"gamma_m", 1}, {"omega_m", 1}, {"n_bar", 1}, {"Gamma", 1}};
  json none = {{"grid", {{"points", 10}}}};
  json unknown = reference();
  unknown["setup"]["mass"] = 1.0;
  json wrong_type = reference();
  wrong_type["setup"]["T"] = "hot";
  json bad_value = reference();
  bad_value["setup"]["eta"] = 1.5;
  json bad_format = reference();
  bad_format["output"] = {{"format", "xml"}};
  json bad_sim = reference();
  bad_sim["sim"] = {{"scheme", "midpoint"}};
  const Case cases[] = {
      {"mixed", mixed, "config"},          {"none", none, "config"},
      {"unknown", unknown, "setup.mass"},  {"type", wrong_type, "setup.T"},
      {"value", bad_value, "setup.eta"},   {"format", bad_format, "output.format"},
      {"sim", bad_sim, "sim.scheme"},
  };
  for (const Case& c : cases) {
    const Result r = invoke({"derive", "--config", write_config(std::string(c.name) + ".json", c.doc).string()});
    EXPECT_EQ(r.code, 2) << c.name;
    EXPECT_NE(r.err.find(c.field), std::string::npos) << c.name << ": " << r.err;
  }
}

TEST(Config, CommandLineErrors) {
  const std::string cfg = (kConfigs / "reference.json").string();
  EXPECT_EQ(invoke({}).code, 2);
  EXPECT_EQ(invoke({"nosuch", "--config", cfg}).code, 2);
  EXPECT_EQ(invoke({"derive"}).code, 2);
  EXPECT_EQ(invoke({"derive", "--config", "/nonexistent.json"}).code, 2);
  EXPECT_EQ(invoke({"derive", "--config", cfg, "--format", "xml"}).code, 2);
  const Result bad_list = invoke({"variance", "--config", cfg, "--g-list", "1,x"});
  EXPECT_EQ(bad_list.code, 2);
  EXPECT_NE(bad_list.err.find("--g-list"), std::string::npos);
  EXPECT_EQ(invoke({"--help"}).code, 0);
}

TEST(Config, OverrideBathRejectsGainChanges) {
  const json doc = {{"bath_override",
                     {{"gamma", 1.0}, {"N", 3.0}, {"M", {-2.0, 0.0}}, {"omega_m", 10.0}, {"gamma_m", 1.0}}}};
  const fs::path p = write_config("override.json", doc);
  const Result ok = invoke({"variance", "--config", p.string(), "--format", "csv"});
  ASSERT_EQ(ok.code, 0) << ok.err;
  const Csv t = parse_csv(ok.out);
  ASSERT_EQ(t.rows.size(), 1u);  // closed forms need physical inputs
  EXPECT_EQ(t.rows[0][1], "lyapunov");
  EXPECT_EQ(invoke({"variance", "--config", p.string(), "--g-list", "1"}).code, 2);
}

TEST(Variance, MethodsSideBySide) {
  const Result r = invoke({"variance", "--config", (kConfigs / "reference.json").string(), "--g-list",
                        "0,1000", "--format", "csv"});
  ASSERT_EQ(r.code, 0) << r.err;
  const Csv t = parse_csv(r.out);
  ASSERT_EQ(t.rows.size(), 5u);  // g = 0 has no high-gain row
  EXPECT_EQ(t.rows[2][1], "closed_form");
  EXPECT_EQ(t.rows[3][1], "lyapunov");
  EXPECT_EQ(t.rows[4][1], "high_gain");
  EXPECT_NEAR(t.num(2, "var_x"), t.num(3, "var_x"), 1e-10 * t.num(2, "var_x"));
  EXPECT_NEAR(t.num(2, "var_p"), t.num(3, "var_p"), 1e-10 * t.num(2, "var_p"));
  EXPECT_TRUE(t.rows[4][3].empty());  // high-gain gives no var_p

  // Values survive the CSV text exactly.
  RunConfig cfg = load_config(kConfigs / "reference.json");
  const SteadyMoments cf = closed_form_moments(make_bath(cfg, {.g = 1000.0}));
  EXPECT_EQ(t.num(2, "var_x"), cf.var_x);
  EXPECT_EQ(t.num(2, "t_eff"), cf.t_eff);
}

TEST(Variance, InstabilityExitsThree) {
  json doc = reference();
  doc["setup"]["phi"] = kHalfPi;
  doc["setup"]["g"] = 2.0;
  const Result r = invoke({"variance", "--config", write_config("unstable_var.json", doc).string()});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("unstable"), std::string::npos);
}

TEST(Spectrum, Fig1Dataset) {
  const fs::path out = scratch("fig1.csv");
  const Result r = invoke({"spectrum", "--config", (kConfigs / "reference.json").string(), "--fig1",
                        "--format", "csv", "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const Csv t = parse_csv(read_text(out));
  EXPECT_EQ(t.header,
            (std::vector<std::string>{"omega", "S_g0", "S_g1", "S_g10", "S_g100", "S_g1000"}));
  ASSERT_EQ(t.rows.size(), 5001u);
  EXPECT_EQ(t.num(0, "omega"), 0.0);
  EXPECT_EQ(t.num(5000, "omega"), 500.0);

  // Each column is S_g / (2 pi <X^2>_{g=0}) on the same grid.
  RunConfig cfg = load_config(kConfigs / "reference.json");
  const double var0 = closed_form_moments(make_bath(cfg, {.g = 0.0})).var_x;
  const EffectiveBath b100 = make_bath(cfg, {.g = 100.0});
  for (std::size_t i : {0u, 628u, 2500u, 5000u}) {
    const double w = t.num(i, "omega");
    EXPECT_NEAR(t.num(i, "S_g100"), spectrum_at(b100, w) / (2.0 * std::numbers::pi * var0),
                1e-14 * t.num(i, "S_g100"));
  }
  // Feedback lowers the resonance.
  EXPECT_LT(t.num(628, "S_g1000"), t.num(628, "S_g0"));

  const Csv sums = parse_csv(read_text(scratch("fig1.sumrule.csv")));
  ASSERT_EQ(sums.rows.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_LT(sums.num(i, "rel_err"), 1e-6);
}

TEST(Spectrum, RawJsonCarriesSumRule) {
  const Result r = invoke({"spectrum", "--config", (kConfigs / "desk_mc.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const json doc = json::parse(r.out);
  EXPECT_EQ(doc["normalization"], "raw");
  EXPECT_EQ(doc["omega"].size(), 4096u);
  ASSERT_TRUE(doc["series"].contains("S_g50"));
  EXPECT_LT(doc["sum_rule"][0]["rel_err"].get<double>(), 1e-6);
}

TEST(Sweep, CartesianOrderAndFlags) {
  json doc = read_json(kConfigs / "desk_mc.json");
  doc["sweep"] = {{"g", {0.5, 2.0}}, {"phi", {-kHalfPi, 0.0, kHalfPi}}, {"eta", {0.5, 1.0}}};
  doc["output"] = {{"format", "csv"}};
  const fs::path p = write_config("sweep.json", doc);
  const Result a = invoke({"sweep", "--config", p.string()});
  ASSERT_EQ(a.code, 0) << a.err;
  const Csv t = parse_csv(a.out);
  ASSERT_EQ(t.rows.size(), 12u);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    EXPECT_EQ(t.num(i, "index"), double(i));
    EXPECT_EQ(t.num(i, "g"), i < 6 ? 0.5 : 2.0);
    EXPECT_EQ(t.num(i, "eta"), i % 2 ? 1.0 : 0.5);
  }
  // g = 2 > gamma_m at phi = +pi/2 leaves gamma < 0.
  const std::size_t unstable = 6 + 2 * 2;
  EXPECT_EQ(t.rows[unstable][7], "false");
  EXPECT_TRUE(t.rows[unstable][10].empty());
  // phi = 0 needs the general Lyapunov solution.
  EXPECT_EQ(t.rows[2].back(), "lyapunov");
  EXPECT_EQ(t.rows[0].back(), "closed_form");

  EXPECT_EQ(invoke({"sweep", "--config", p.string()}).out, a.out);
}

TEST(Sweep, GainGridBracketsOptimizer) {
  const fs::path out = scratch("gain_sweep.json");
  const Result r = invoke({"sweep", "--config", (kConfigs / "reference_gain_sweep.json").string(), "--format",
                        "json", "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const json doc = read_json(out);
  ASSERT_TRUE(doc.contains("optimum"));
  const double g_opt = doc["optimum"]["optimizer"]["g_opt"].get<double>();
  const double grid_g = doc["optimum"]["grid_g"].get<double>();
  const double step = std::pow(10.0, 0.1);  // grid spacing of the bundled sweep
  EXPECT_LT(std::abs(std::log(grid_g / g_opt)), std::log(step));
  EXPECT_LE(doc["optimum"]["optimizer"]["var_x_min"].get<double>(),
            doc["optimum"]["grid_var_x"].get<double>());
}

TEST(Fock, DeskSetAgreesWithClosedForm) {
  json doc = read_json(kConfigs / "desk_fock.json");
  doc["fock"].erase("dim");  // use the estimated truncation
  doc["fock"]["tol"] = 1e-7;
  const fs::path dump = scratch("rho.bin");
  doc["fock"]["dump"] = dump.string();
  const Result r = invoke({"fock", "--config", write_config("fock.json", doc).string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const json rep = json::parse(r.out);
  EXPECT_TRUE(rep["lindblad_positive"].get<bool>());
  const std::size_t dim = rep["dim"].get<std::size_t>();
  EXPECT_EQ(dim, rep["estimated_dim"].get<std::size_t>());
  EXPECT_EQ(dim, required_dim(1.0 / std::expm1(1.0 / 3.0)));  // the initial thermal state dominates
  EXPECT_LT(rep["solution"]["tail_population"].get<double>(), kTailThreshold);
  const double vx = rep["solution"]["moments"]["var_x"].get<double>();
  EXPECT_NEAR(vx, rep["closed_form"]["var_x"].get<double>(), 1e-4 * vx);
  EXPECT_EQ(fs::file_size(dump), dim * dim * 16u);

  // The dump is the row-major density matrix: unit trace.
  std::ifstream in(dump, std::ios::binary);
  std::vector<double> raw(dim * dim * 2);
  in.read(reinterpret_cast<char*>(raw.data()), std::streamsize(raw.size() * sizeof(double)));
  double trace = 0.0;
  for (std::size_t k = 0; k < dim; ++k) trace += raw[2 * (k * dim + k)];
  EXPECT_NEAR(trace, 1.0, 1e-10);
}

TEST(Fock, CeilingsRefuseWithValidationError) {
  json hot = read_json(kConfigs / "desk_fock.json");
  hot["bath_inputs"]["n_bar"] = 100.0;
  Result r = invoke({"fock", "--config", write_config("hot.json", hot).string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("fock.n_bar_ceiling"), std::string::npos) << r.err;

  json wide = read_json(kConfigs / "desk_fock.json");
  wide["fock"]["dim_ceiling"] = 40;
  r = invoke({"fock", "--config", write_config("wide.json", wide).string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("fock.dim_ceiling"), std::string::npos) << r.err;
}

TEST(Fock, TruncationFailureExitsFour) {
  json doc = read_json(kConfigs / "desk_fock.json");
  doc["fock"]["dim"] = 12;
  doc["fock"]["t_final"] = 20.0;
  const Result r = invoke({"fock", "--config", write_config("narrow.json", doc).string()});
  EXPECT_EQ(r.code, 4);
  EXPECT_NE(r.err.find("numerical"), std::string::npos) << r.err;
}

TEST(Simulate, RequiresOutputPath) {
  const Result r = invoke({"simulate", "--config", write_config("mc.json", small_mc()).string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("out"), std::string::npos);
}

TEST(Simulate, FilesArePureFunctionsOfConfigAndSeed) {
  json doc = small_mc();
  doc["sim"]["threads"] = 1;
  const fs::path c1 = write_config("mc1.json", doc);
  doc["sim"]["threads"] = 3;
  const fs::path c3 = write_config("mc3.json", doc);

  ASSERT_EQ(invoke({"simulate", "--config", c1.string(), "--out", scratch("a.json").string()}).code, 0);
  ASSERT_EQ(invoke({"simulate", "--config", c3.string(), "--out", scratch("b.json").string()}).code, 0);
  ASSERT_EQ(invoke({"simulate", "--config", c1.string(), "--out", scratch("c.json").string(), "--seed",
                 "100"}).code,
            0);
  EXPECT_EQ(read_text(scratch("a.json")), read_text(scratch("b.json")));
  EXPECT_EQ(read_text(scratch("a.psd.csv")), read_text(scratch("b.psd.csv")));
  EXPECT_NE(read_text(scratch("a.json")), read_text(scratch("c.json")));

  const json a = read_json(scratch("a.json"));
  EXPECT_EQ(a["sim"]["seed"].get<std::uint64_t>(), 99u);
  EXPECT_EQ(read_json(scratch("c.json"))["sim"]["seed"].get<std::uint64_t>(), 100u);
  const Csv psd = parse_csv(read_text(scratch("a.psd.csv")));
  EXPECT_EQ(psd.header, (std::vector<std::string>{"omega", "psd", "psd_stderr"}));
  EXPECT_EQ(psd.rows.size(), 129u);  // 256-sample segments, omega >= 0
}

TEST(Compare, StatsFileMatchesFreshRun) {
  const json doc = small_mc();
  const fs::path cfg = write_config("cmp_fresh.json", doc);
  ASSERT_EQ(invoke({"simulate", "--config", cfg.string(), "--out", scratch("cmp.json").string()}).code, 0);
  json from_file = doc;
  from_file["compare"] = {{"stats", scratch("cmp.json").string()}};

  const Result fresh = invoke({"compare", "--config", cfg.string()});
  const Result stored = invoke({"compare", "--config", write_config("cmp_file.json", from_file).string()});
  ASSERT_EQ(fresh.code, 0) << fresh.err;
  ASSERT_EQ(stored.code, 0) << stored.err;
  const json f = json::parse(fresh.out), s = json::parse(stored.out);
  EXPECT_EQ(f["moments"], s["moments"]);
  EXPECT_EQ(f["psd"], s["psd"]);
  EXPECT_EQ(f["moments"][0]["quantity"], "var_x");
  EXPECT_TRUE(f.contains("agree"));

  json broken = doc;
  broken["compare"] = {{"stats", (kConfigs / "reference.json").string()}};
  EXPECT_EQ(invoke({"compare", "--config", write_config("cmp_bad.json", broken).string()}).code, 2);
}

template <class T>
T round_trip(const T& v) {
  return json::parse(json(v).dump()).get<T>();
}

TEST(RoundTrip, ReportsSurviveJsonBitExactly) {
  PhysicalSetup s;
  s.m = 10.0, s.nu_m = 10.0, s.gamma_m = 0.0, s.L = 4.0, s.nu_0 = 5.82e14, s.T_r = 0.02;
  s.P_in = 10.0, s.T = 300.0, s.g = 1e3, s.phi = -kHalfPi;
  const DerivedCoupling d = derive_coupling(s);
  ASSERT_TRUE(std::isinf(d.Q_m));
  const DerivedCoupling d2 = round_trip(d);
  EXPECT_EQ(d2.Q_m, d.Q_m);
  EXPECT_EQ(d2.Gamma, d.Gamma);
  EXPECT_EQ(d2.beta_s, d.beta_s);
  EXPECT_EQ(d2.chi, d.chi);
  EXPECT_EQ(d2.x_s, d.x_s);
  EXPECT_EQ(d2.adiabatic, d.adiabatic);

  s.gamma_m = 0.7;
  const EffectiveBath b = build_bath(derive_coupling(s), s);
  const EffectiveBath b2 = round_trip(b);
  EXPECT_EQ(b2.N, b.N);
  EXPECT_EQ(b2.M, b.M);
  EXPECT_EQ(b2.squeeze_coeff, b.squeeze_coeff);
  EXPECT_EQ(b2.temperature, b.temperature);
  EXPECT_EQ(b2.from_inputs, b.from_inputs);

  StabilityReport st = check_stability(b);
  st.positivity_gap = std::numeric_limits<double>::quiet_NaN();
  const StabilityReport st2 = round_trip(st);
  EXPECT_EQ(st2.stable, st.stable);
  EXPECT_EQ(st2.margin_spring, st.margin_spring);
  EXPECT_TRUE(std::isnan(st2.positivity_gap));

  const SteadyMoments hg = round_trip(high_gain_moments(b));
  EXPECT_EQ(hg.var_x, high_gain_moments(b).var_x);
  EXPECT_FALSE(hg.var_p.has_value());
  EXPECT_EQ(hg.method, MomentMethod::high_gain);
  const SteadyMoments ly = round_trip(lyapunov_moments(b));
  EXPECT_EQ(*ly.cov_xp_sym, *lyapunov_moments(b).cov_xp_sym);

  const std::vector<double> grid = uniform_grid(-300.0, 300.0, 7);
  const SpectrumSeries sp = eval_spectrum(b, grid);
  const SpectrumSeries sp2 = round_trip(sp);
  EXPECT_EQ(sp2.values, sp.values);
  EXPECT_EQ(sp2.omega_grid, sp.omega_grid);

  const SumRuleResult sr = sum_rule_check(b);
  EXPECT_EQ(round_trip(sr).integral, sr.integral);

  const GainOptimum go = optimize_gain(b, 1.0, 1e7);
  EXPECT_EQ(round_trip(go).g_opt, go.g_opt);

  BathInputs in;
  in.gamma_m = 1.0, in.omega_m = 10.0, in.n_bar = 3.0, in.Gamma = 40.0, in.g = 8.0, in.phi = -kHalfPi;
  const EffectiveBath desk = build_bath(in);
  SimConfig sim = recommended_config(desk);
  sim.n_traj = 4, sim.t_sample = 1.0, sim.welch_segment = 128, sim.seed = 5;
  const TrajectoryEnsembleStats ts = simulate(desk, sim);
  const TrajectoryEnsembleStats ts2 = round_trip(ts);
  EXPECT_EQ(ts2.var_x.value, ts.var_x.value);
  EXPECT_EQ(ts2.cov_xp.std_error, ts.cov_xp.std_error);
  EXPECT_EQ(ts2.psd.values, ts.psd.values);
  EXPECT_EQ(ts2.psd_stderr, ts.psd_stderr);
  EXPECT_EQ(ts2.n_traj, ts.n_traj);
  EXPECT_EQ(ts2.n_effective, ts.n_effective);

  const PsdComparison pc = psd_vs_analytic(ts, eval_spectrum(desk, ts.psd.omega_grid));
  const PsdComparison pc2 = round_trip(pc);
  EXPECT_EQ(pc2.z_scores, pc.z_scores);
  EXPECT_EQ(pc2.dof, pc.dof);
  EXPECT_EQ(pc2.passed, pc.passed);

  FockConfig fc;
  fc.dim = 30;
  const FockSolution fs0 = evolve(build_generator(desk, 30), fc, thermal_state(1.0, 30), 0.5);
  const FockSolution fs2 = round_trip(fs0);
  EXPECT_EQ(fs2.moments.a2, fs0.moments.a2);
  EXPECT_EQ(fs2.moments.var_p, fs0.moments.var_p);
  EXPECT_EQ(fs2.steps, fs0.steps);
  EXPECT_EQ(fs2.warnings, fs0.warnings);
  EXPECT_EQ(fs2.min_eigenvalue, fs0.min_eigenvalue);
}

TEST(Csv, LocaleIndependentShortestDigits) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(1000.0), "1000");
  EXPECT_EQ(format_double(-2.5e-300), "-2.5e-300");
  EXPECT_EQ(format_double(std::numeric_limits<double>::infinity()), "inf");

  const std::locale saved = std::locale::global(std::locale::classic());
  try {
    std::locale::global(std::locale("de_DE.UTF-8"));
  } catch (const std::runtime_error&) {
    // No comma-decimal locale installed; to_chars ignores locales regardless.
  }
  std::ostringstream os;
  write_csv(os, Table{{"a", "b", "c"}, {{0.5, std::string("x,y"), Cell{}}}});
  std::locale::global(saved);
  EXPECT_EQ(os.str(), "a,b,c\n0.5,\"x,y\",\n");
}

TEST(Determinism, RepeatedCommandsProduceIdenticalOutput) {
  const std::string cfg = (kConfigs / "reference.json").string();
  for (const char* verb : {"derive", "variance", "spectrum"}) {
    const Result a = invoke({verb, "--config", cfg, "--g-list", "0,50"});
    const Result b = invoke({verb, "--config", cfg, "--g-list", "0,50"});
    ASSERT_EQ(a.code, 0) << verb << ": " << a.err;
    EXPECT_EQ(a.out, b.out) << verb;
  }
}
