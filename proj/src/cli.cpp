#include "cohimpact/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <numeric>

#include "CLI11.hpp"
#include "cohimpact/emit.hpp"
#include "cohimpact/errors.hpp"
#include "cohimpact/heom.hpp"
#include "cohimpact/impact.hpp"
#include "cohimpact/lightcone.hpp"
#include "cohimpact/units.hpp"

namespace cohimpact::cli {

namespace fs = std::filesystem;
using emit::Cell;
using emit::Table;

Regime parse_regime(const std::string& s) {
  if (s == "fast") return Regime::fast;
  if (s == "intermediate") return Regime::intermediate;
  throw ConfigError("regime must be 'fast' or 'intermediate', got '" + s + "'");
}

double regime_tau_c(Regime r) {
  return units::femtoseconds(r == Regime::fast ? 2.65 : 53.1);
}

ImpactScenario dimer_impact_scenario(const Config& cfg, Regime regime, double ratio, bool deep) {
  ImpactScenario s;
  auto& p = s.params;
  p.coupling = cfg.energy_or("J", units::wavenumber(100.0));
  p.detuning = cfg.energy_or("detuning", units::wavenumber(100.0));
  p.gamma_d = cfg.energy_or("Gamma_D", 0.0);
  p.gamma_a = cfg.energy_or("Gamma_A", 0.0);
  p.kappa_a = cfg.energy_or("kappa_A", 0.0);
  ratio = cfg.number_or("ratio", ratio);
  if (!(ratio > 0.0)) throw ConfigError("J/E_R ratio must be positive");
  const double kt = cfg.energy_or("T", units::kelvin(300.0));
  const double tau_c = cfg.time_or("tau_c", regime_tau_c(regime));
  s.depth = cfg.integer_or("depth", deep ? 8 : 5);
  s.matsubara = cfg.integer_or("matsubara", deep ? 6 : 3);
  p.bath = DrudeLorentzBath{p.coupling / ratio, 1.0 / tau_c, kt, s.matsubara};
  s.t_max = cfg.time_or("t_max", regime == Regime::fast ? 2.0 : 1.0);
  s.points = cfg.integer_or("points", 401);
  const std::string engine = cfg.word_or("engine", "heom");
  if (engine == "heom") {
    s.engine = dimer::Engine::heom;
  } else if (engine == "lindblad") {
    s.engine = dimer::Engine::lindblad;
    p.dephasing = dimer::gamma_eff(p.bath->reorganization, kt, p.bath->cutoff);
  } else {
    throw ConfigError("engine must be 'heom' or 'lindblad'");
  }
  if (s.points < 2) throw ConfigError("points must be >= 2");
  return s;
}

ImpactCurve dimer_impact_curve(const ImpactScenario& s) {
  ImpactCurve out;
  out.t = linspace(0.0, s.t_max, static_cast<std::size_t>(s.points));
  const Matrix rho0 = dimer::site_state(dimer::D);
  const Matrix ma = projector(4, dimer::A);
  std::vector<Matrix> states;
  HeisenbergSeries series;
  if (s.engine == dimer::Engine::heom) {
    const HeomModel hm = dimer::build_heom(s.params, s.depth);
    states = propagate_heom(hm, rho0, out.t);
    series = reconstruct_observable(hm, ma, out.t, dimer::kDonor);
  } else {
    const LindbladModel lm = dimer::build_lindblad(s.params);
    states = propagate_state(lm, rho0, out.t);
    series = heisenberg_evolve(lm, ma, out.t);
  }
  for (std::size_t k = 0; k < out.t.size(); ++k) {
    out.rho_dd.push_back(states[k](dimer::D, dimer::D).real());
    out.c.push_back(impact_of(series.matrices[k]));
  }
  return out;
}

double half_envelope_time(const std::vector<double>& t, const std::vector<double>& c) {
  std::vector<double> env(c.size());
  double m = 0.0;
  for (std::size_t k = c.size(); k-- > 0;) {
    m = std::max(m, c[k]);
    env[k] = m;
  }
  if (env.empty()) return std::nan("");
  for (std::size_t k = 0; k < c.size(); ++k)
    if (env[k] <= 0.5 * env[0]) return t[k];
  return std::nan("");
}

chain::ChainParams ChainScenario::params(int n, double ratio) const {
  auto p = chain::ChainParams::homogeneous(n, coupling, recombination, trap,
                                           chain::gamma_phi_ohmic(coupling / ratio, kt, omega_c));
  std::fill(p.energies.begin(), p.energies.end(), energy);
  return p;
}

ChainScenario chain_scenario(const Config& cfg, std::vector<int> default_sizes) {
  ChainScenario s;
  s.coupling = cfg.energy_or("J", units::wavenumber(100.0));
  s.energy = cfg.energy_or("epsilon", 0.0);
  s.kt = cfg.energy_or("T", units::kelvin(300.0));
  s.recombination = cfg.energy_or("Gamma", 0.01);
  s.trap = cfg.energy_or("kappa", 1.0);
  // tau_c = 0.01 / J unless given; omega_c = 1 / tau_c.
  s.omega_c = cfg.has("omega_c") ? cfg.energy("omega_c")
              : cfg.has("tau_c") ? 1.0 / cfg.time("tau_c")
                                 : 100.0 * s.coupling;
  if (cfg.has("N")) {
    for (double x : cfg.numbers("N")) {
      if (x != std::floor(x) || x < 2) throw ConfigError(cfg.source() + ": field 'N': sizes must be integers >= 2");
      s.sizes.push_back(static_cast<int>(x));
    }
  } else {
    s.sizes = std::move(default_sizes);
  }
  s.ratios = cfg.has("ratio") ? cfg.numbers("ratio") : std::vector<double>{0.2, 1.0, 10.0};
  for (double r : s.ratios)
    if (!(r > 0.0)) throw ConfigError(cfg.source() + ": field 'ratio': must be positive");
  return s;
}

double early_mean(const std::vector<double>& t, const std::vector<double>& c, double window) {
  double sum = 0.0;
  std::size_t k = 0;
  for (std::size_t i = 0; i < t.size(); ++i)
    if (t[i] <= window + 1e-12) {
      sum += c[i];
      ++k;
    }
  return k ? sum / static_cast<double>(k) : std::nan("");
}

namespace {

struct Common {
  std::string config_path;
  std::string out_dir = ".";
  std::string format = "csv";
};

struct Context {
  Config cfg;
  fs::path out;
  emit::Format format;
  std::ostream& log;

  fs::path file(const std::string& stem) const {
    return out / (stem + (format == emit::Format::csv ? ".csv" : ".json"));
  }
  void save(const std::string& stem, const Table& t) const {
    emit::write(file(stem), t, format);
    log << "wrote " << file(stem).string() << " (" << t.rows.size() << " rows)\n";
  }
  void save_json(const std::string& stem, const nlohmann::json& doc) const {
    const fs::path p = out / (stem + ".json");
    emit::write_json(p, doc);
    log << "wrote " << p.string() << "\n";
  }
};

Context make_context(const Common& c, std::ostream& log) {
  Config cfg;
  if (!c.config_path.empty()) {
    cfg = Config::load(c.config_path);
    if (cfg.empty()) throw CLI::ValidationError("--config", "config file '" + c.config_path + "' is empty");
  }
  const fs::path out(c.out_dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw ConfigError("cannot create output directory '" + out.string() + "'");
  return {std::move(cfg), out, emit::parse_format(c.format), log};
}

// --- dimer --------------------------------------------------------------

int cmd_dimer_impact(const Context& ctx, const std::string& regime, double ratio, bool deep) {
  ctx.cfg.require_known({"J", "detuning", "T", "tau_c", "ratio", "depth", "matsubara", "t_max",
                         "points", "engine", "Gamma_D", "Gamma_A", "kappa_A"});
  const ImpactScenario s = dimer_impact_scenario(ctx.cfg, parse_regime(regime), ratio, deep);
  const ImpactCurve curve = dimer_impact_curve(s);
  Table t{"dimer-impact", {"t_ps", "rho_DD", "C"}, {}};
  for (std::size_t k = 0; k < curve.t.size(); ++k) t.add({curve.t[k], curve.rho_dd[k], curve.c[k]});
  ctx.save("dimer-impact", t);
  ctx.log << "max C = " << *std::max_element(curve.c.begin(), curve.c.end())
          << ", time to half envelope = " << half_envelope_time(curve.t, curve.c) << " ps\n";
  return kSuccess;
}

dimer::DimerParams transport_params(const Config& cfg) {
  dimer::DimerParams p;
  p.coupling = cfg.energy_or("J", units::wavenumber(100.0));
  p.detuning = cfg.energy_or("detuning", units::wavenumber(100.0));
  p.kappa_a = cfg.energy_or("kappa_A", 1.0);
  p.gamma_a = cfg.energy_or("Gamma_A", 0.1);
  p.gamma_d = cfg.energy_or("Gamma_D", 0.1);
  return p;
}

int cmd_dimer_efficiency(const Context& ctx, const std::string& engine_name) {
  ctx.cfg.require_known({"J", "detuning", "kappa_A", "Gamma_A", "Gamma_D", "gamma_min", "gamma_max",
                         "points", "engine", "T", "tau_c", "depth", "matsubara"});
  dimer::DimerParams p = transport_params(ctx.cfg);
  const std::string engine = ctx.cfg.word_or("engine", engine_name);
  const double g0 = ctx.cfg.energy_or("gamma_min", 1.0), g1 = ctx.cfg.energy_or("gamma_max", 1000.0);
  const int n = ctx.cfg.integer_or("points", 25);
  if (!(g0 > 0.0 && g1 > g0) || n < 2) throw ConfigError("gamma grid needs 0 < gamma_min < gamma_max and points >= 2");
  const auto gammas = logspace(g0, g1, static_cast<std::size_t>(n));
  dimer::Engine e = dimer::Engine::lindblad;
  int depth = ctx.cfg.integer_or("depth", 5);
  if (engine == "heom") {
    e = dimer::Engine::heom;
    const double kt = ctx.cfg.energy_or("T", units::kelvin(300.0));
    const double tau_c = ctx.cfg.time_or("tau_c", regime_tau_c(Regime::fast));
    p.bath = DrudeLorentzBath{0.0, 1.0 / tau_c, kt, ctx.cfg.integer_or("matsubara", 3)};
  } else if (engine != "lindblad") {
    throw ConfigError("engine must be 'heom' or 'lindblad'");
  }
  const auto rows = dimer::sweep_enaqt(p, gammas, e, depth);
  Table t{"dimer-efficiency",
          {"gamma_eff_ps", "state", "eta", "eta_free", "delta_eta", "C_eta", "eta_bound_holds", "tau_ps",
           "tau_free_ps", "delta_tau_ps", "C_tau", "N_bound_holds", "tau_bound_applicable", "tau_bound_ps",
           "tau_bound_holds"},
          {}};
  bool ok = true;
  for (const auto& r : rows) {
    const auto& b = r.report;
    ok = ok && b.eta_holds && b.n_holds && (!b.tau_applicable || b.tau_holds);
    t.add({r.gamma, r.state, b.eff.eta, b.eff.eta_free, b.eff.delta, b.c_eta, b.eta_holds, b.time.tau,
           b.time.tau_free, b.time.delta, b.c_tau, b.n_holds, b.tau_applicable,
           b.tau_applicable ? b.tau_bound : std::nan(""), b.tau_holds});
  }
  ctx.save("dimer-efficiency", t);
  ctx.log << (ok ? "all coherence bounds hold\n" : "BOUND VIOLATION\n");
  return ok ? kSuccess : kFailure;
}

int cmd_dimer_gate(const Context& ctx) {
  ctx.cfg.require_known({"J", "detuning", "kappa_A", "Gamma_A", "Gamma_D", "gamma", "gate_length",
                         "weight_A", "weight_D", "t_max", "points"});
  dimer::DimerParams p = transport_params(ctx.cfg);
  p.dephasing = ctx.cfg.energy_or("gamma", 10.0);
  const double dt = ctx.cfg.time_or("gate_length", 0.1);
  const double wa = ctx.cfg.number_or("weight_A", 1.0), wd = ctx.cfg.number_or("weight_D", 1.0);
  const LindbladModel model = dimer::build_lindblad(p);
  const Matrix ma = dimer::gate_effect(model, p, {dimer::Channel::A, 0.0, dt, dimer::WeightProfile::constant(wa)});
  const Matrix md = dimer::gate_effect(model, p, {dimer::Channel::D, 0.0, dt, dimer::WeightProfile::constant(wd)});
  const double top = hermitian_eigenvalues(Matrix(ma + md)).maxCoeff();
  const bool povm = top <= 1.0 + 1e-9;

  const auto times = linspace(0.0, ctx.cfg.time_or("t_max", 2.0),
                              static_cast<std::size_t>(ctx.cfg.integer_or("points", 201)));
  const auto ca = impact_from_series(heisenberg_evolve(model, ma, times));
  const auto cd = impact_from_series(heisenberg_evolve(model, md, times));
  Table t{"dimer-gate", {"t_ps", "C_A", "C_D", "C_A_per_ps", "C_D_per_ps"}, {}};
  for (std::size_t k = 0; k < times.size(); ++k)
    t.add({times[k], ca[k].value, cd[k].value, ca[k].value / dt, cd[k].value / dt});
  ctx.save("dimer-gate", t);
  ctx.save_json("dimer-gate-summary",
                emit::document("dimer-gate-summary", {{"gate_length_ps", dt},
                                                      {"povm_max_eigenvalue", top},
                                                      {"povm_ok", povm}}));
  ctx.log << "largest eigenvalue of M_A + M_D = " << top << (povm ? "" : "  EXCEEDS 1") << "\n";
  return povm ? kSuccess : kFailure;
}

// --- chain --------------------------------------------------------------

const std::set<std::string> kChainKeys = {"J", "epsilon", "T", "Gamma", "kappa", "omega_c", "tau_c",
                                          "N", "ratio", "t_max", "points", "window"};

int cmd_chain_impact(const Context& ctx) {
  ctx.cfg.require_known(kChainKeys);
  const ChainScenario s = chain_scenario(ctx.cfg, {5, 10, 50});
  const auto times = linspace(0.0, ctx.cfg.time_or("t_max", 5.0),
                              static_cast<std::size_t>(ctx.cfg.integer_or("points", 251)));
  const double window = ctx.cfg.time_or("window", 2.0);
  Table t{"chain-impact", {"N", "J_over_ER", "t_ps", "C"}, {}};
  for (double ratio : s.ratios)
    for (int n : s.sizes) {
      const auto series = chain::trap_effect_series(chain::build_chain(s.params(n, ratio)), times);
      std::vector<double> c;
      for (const Matrix& m : series) c.push_back(impact_of(m));
      for (std::size_t k = 0; k < times.size(); ++k)
        t.add({static_cast<std::int64_t>(n), ratio, times[k], c[k]});
      ctx.log << "N=" << n << " J/E_R=" << ratio << ": mean C over [0," << window
              << "] ps = " << early_mean(times, c, window) << "\n";
    }
  ctx.save("chain-impact", t);
  return kSuccess;
}

int cmd_chain_bounds(const Context& ctx) {
  ctx.cfg.require_known(kChainKeys);
  const ChainScenario s = chain_scenario(ctx.cfg, {5, 10, 50});
  const auto times = linspace(0.0, ctx.cfg.time_or("t_max", 5.0),
                              static_cast<std::size_t>(ctx.cfg.integer_or("points", 51)));
  Table t{"chain-bounds",
          {"N", "J_over_ER", "t_ps", "C", "eta_max", "eta_incoh", "gap", "bound", "thm1_pass",
           "thm5_applicable", "thm5_deficit", "thm5_bound", "pass"},
          {}};
  bool ok = true;
  for (double ratio : s.ratios)
    for (int n : s.sizes) {
      const auto series = chain::trap_effect_series(chain::build_chain(s.params(n, ratio)), times);
      for (std::size_t k = 0; k < times.size(); ++k) {
        const chain::TrapReport r = chain::analyze_full(series[k], n, times[k]);
        const chain::Check t1 = chain::theorem1_check(r);
        const chain::Theorem5 t5 = chain::theorem5_check(r);
        bool pass = t1.pass && t5.check.pass;
        const chain::Theorem3 t3 = chain::theorem3_check(r, r.witness);
        const chain::Corollary4 c4 = chain::corollary4_check(r, r.witness);
        pass = pass && t3.pass() && c4.pass();
        for (Index a = 0; a < n && pass; ++a)
          for (Index b = a + 1; b < n && pass; ++b) pass = chain::corollary2_bounds(r, a, b).pass();
        ok = ok && pass;
        t.add({static_cast<std::int64_t>(n), ratio, times[k], r.c, r.eta_max, r.eta_incoh,
               r.eta_max - r.eta_incoh, r.c, t1.pass, t5.check.applicable, t5.deficit,
               t5.check.applicable ? t5.bound : std::nan(""), pass});
      }
    }
  ctx.save("chain-bounds", t);
  ctx.log << (ok ? "all theorem checks pass\n" : "THEOREM CHECK FAILED\n");
  return ok ? kSuccess : kFailure;
}

int cmd_chain_optimizers(const Context& ctx) {
  ctx.cfg.require_known(kChainKeys);
  const ChainScenario s = chain_scenario(ctx.cfg, {3, 5, 10, 20, 50});
  Table t{"chain-optimizers",
          {"N", "J_over_ER", "optimizer", "eigenvalue", "l1_ratio", "ipr", "degeneracy"},
          {}};
  Table h{"chain-optimizers-histogram", {"N", "J_over_ER", "optimizer", "site", "population"}, {}};
  for (double ratio : s.ratios)
    for (int n : s.sizes) {
      const chain::ChainParams p = s.params(n, ratio);
      const Matrix m = extract_block(chain::trap_effect_infinite(p), chain::donor_indices(n));
      const chain::OptimizerReport rep = chain::optimizer_analysis(m);
      for (const auto& [name, o] : {std::pair<const char*, const chain::Optimizer&>{"eta", rep.eta},
                                    {"coherence", rep.sensitivity}}) {
        t.add({static_cast<std::int64_t>(n), ratio, std::string(name), o.eigenvalue, o.l1_ratio, o.ipr,
               static_cast<std::int64_t>(o.degeneracy)});
        for (std::size_t k = 0; k < o.populations.size(); ++k)
          h.add({static_cast<std::int64_t>(n), ratio, std::string(name), static_cast<std::int64_t>(k + 1),
                 o.populations[k]});
      }
    }
  ctx.save("chain-optimizers", t);
  ctx.save("chain-optimizers-histogram", h);
  return kSuccess;
}

// --- light cone ----------------------------------------------------------

int cmd_lightcone(const Context& ctx, double ratio_flag) {
  std::set<std::string> keys = kChainKeys;
  keys.insert({"distances", "threshold", "eps", "t_trunc"});
  ctx.cfg.require_known(keys);
  ChainScenario s = chain_scenario(ctx.cfg, {50});
  const double ratio = ctx.cfg.has("ratio") ? s.ratios.front() : ratio_flag;
  const int n = s.sizes.front();
  const chain::ChainParams p = s.params(n, ratio);
  std::vector<double> ds = ctx.cfg.has("distances") ? ctx.cfg.numbers("distances")
                                                    : std::vector<double>{10, 20, 30, 40};
  std::vector<std::vector<Index>> sets;
  for (double d : ds) {
    const int di = static_cast<int>(d);
    if (di < 0 || n - di - 1 < 1) throw ConfigError("distance " + std::to_string(di) + " does not fit the chain");
    sets.push_back({chain::slot(n - di - 1), chain::slot(n - di)});
  }
  const auto times = linspace(0.0, ctx.cfg.time_or("t_max", 2.0),
                              static_cast<std::size_t>(ctx.cfg.integer_or("points", 121)));
  const double threshold = ctx.cfg.number_or("threshold", 1e-3);
  const LindbladModel model = chain::build_chain(p);
  const Index sink[1] = {chain::S};
  const auto prof = lightcone::restricted_profile(model, projector(model.dim(), chain::S), sink, sets, times);

  // The tail outside the cone (below the arrival threshold) carries the fit.
  std::vector<lightcone::EnvelopeSample> samples;
  for (std::size_t i = 0; i < sets.size(); ++i)
    for (std::size_t k = 0; k < times.size(); ++k)
      if (prof.values[i][k] < threshold) samples.push_back({ds[i] + 1.0, times[k], prof.values[i][k]});
  const lightcone::LightConeFit fit = lightcone::fit_envelope(samples, 1.0);

  Table t{"lightcone", {"d_S", "t_ps", "C", "envelope", "margin"}, {}};
  std::vector<double> arrivals;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    for (std::size_t k = 0; k < times.size(); ++k) {
      const double env = fit.envelope(ds[i] + 1.0, times[k], 1.0);
      t.add({static_cast<std::int64_t>(ds[i]), times[k], prof.values[i][k], env, env - prof.values[i][k]});
    }
    arrivals.push_back(lightcone::arrival_time(times, prof.values[i], threshold));
  }
  ctx.save("lightcone", t);

  nlohmann::json arr = nlohmann::json::array();
  for (double a : arrivals) arr.push_back(std::isfinite(a) ? nlohmann::json(a) : nlohmann::json(nullptr));
  nlohmann::json body = {{"N", n},         {"J_over_ER", ratio},       {"C_QL", fit.c_ql},
                         {"C_LC", fit.c_lc}, {"v_QL", fit.v_ql},         {"mu", fit.mu},
                         {"v_LC", fit.v_lc}, {"r2", fit.r2},             {"offset_shift", fit.offset_shift},
                         {"points", fit.points}, {"inside_fraction", fit.inside_fraction},
                         {"distances", ds},  {"arrival_times_ps", arr}, {"threshold", threshold}};
  if (std::all_of(arrivals.begin(), arrivals.end(), [](double a) { return std::isfinite(a); })) {
    const auto lf = lightcone::linear_fit(ds, arrivals);
    body["arrival_fit"] = {{"slope_ps_per_site", lf.slope}, {"intercept_ps", lf.intercept}, {"r2", lf.r2}};
  }
  const double eps = ctx.cfg.number_or("eps", 1e-4);
  const double t_trunc = ctx.cfg.time_or("t_trunc", 1.0);
  const int radius = lightcone::truncation_radius(fit, t_trunc, eps, 1.0);
  const auto rep = lightcone::truncation_experiment(p, sets.front(), linspace(0.0, t_trunc, 21), radius, eps);
  body["truncation"] = {{"t_ps", t_trunc}, {"eps", eps}, {"radius", radius}, {"kept_sites", rep.kept_sites},
                        {"max_deviation", rep.max_deviation}, {"pass", rep.pass}};
  ctx.save_json("lightcone-fit", emit::document("lightcone-fit", body));
  ctx.log << "mu = " << fit.mu << ", v_LC = " << fit.v_lc << " sites/ps, fit R^2 = " << fit.r2
          << ", truncation radius " << radius << " (deviation " << rep.max_deviation << ")\n";
  return rep.pass ? kSuccess : kFailure;
}

// --- verify -------------------------------------------------------------

int cmd_verify(const Context& ctx, std::size_t instances, std::uint64_t seed, std::size_t falsify,
               std::size_t samples) {
  ctx.cfg.require_known({});
  const auto s = chain::run_corpus(instances, seed, std::min(falsify, instances), samples);
  const double sink_tol = 1e-7;
  const bool ok = s.violations == 0 && s.counterexamples == 0 && s.max_sink_identity <= sink_tol;
  auto margin = [](double m) { return m >= 1e299 ? nlohmann::json(nullptr) : nlohmann::json(m); };
  nlohmann::json body = {{"instances", s.instances},
                         {"seed", seed},
                         {"violations", s.violations},
                         {"min_margin",
                          {{"theorem1", margin(s.min_thm1)},
                           {"corollary2", margin(s.min_cor2)},
                           {"theorem3", margin(s.min_thm3)},
                           {"corollary4", margin(s.min_cor4)},
                           {"theorem5", margin(s.min_thm5)}}},
                         {"theorem5_applicable", s.thm5_applicable},
                         {"max_sink_identity_error", s.max_sink_identity},
                         {"falsification_states", s.falsification_states},
                         {"counterexamples", s.counterexamples},
                         {"pass", ok}};
  ctx.save_json("verify", emit::document("verify", body));
  ctx.log << "instances " << s.instances << ", violations " << s.violations << "\n"
          << "min margin: thm1 " << s.min_thm1 << ", cor2 " << s.min_cor2 << ", thm3 " << s.min_thm3
          << ", cor4 " << s.min_cor4 << ", thm5 " << s.min_thm5 << " (" << s.thm5_applicable
          << " applicable)\n"
          << "sink identity max error " << s.max_sink_identity << "\n"
          << "falsification: " << s.falsification_states << " states, " << s.counterexamples
          << " counterexamples\n"
          << (ok ? "PASS\n" : "FAIL\n");
  return ok ? kSuccess : kFailure;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Coherence impact diagnostics for open-system transport models", "cohimpact"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "scenario file (key = value unit)");
    sub->add_option("--out", common.out_dir, "output directory");
    sub->add_option("--format", common.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  };

  std::string regime = "fast", engine = "lindblad";
  double ratio = 10.0, lc_ratio = 1.0;
  bool deep = false;
  std::size_t instances = 200, falsify = 20, samples = 100000;
  std::uint64_t seed = 7;

  auto* di = app.add_subcommand("dimer-impact", "rho_DD(t) and C(t) for the donor-acceptor dimer");
  add_common(di);
  di->add_option("--regime", regime, "fast or intermediate bath")->check(CLI::IsMember({"fast", "intermediate"}));
  di->add_option("--ratio", ratio, "J/E_R");
  di->add_flag("--deep", deep, "deeper hierarchy (slow)");
  auto* de = app.add_subcommand("dimer-efficiency", "efficiency and transfer-time sweep with bounds");
  add_common(de);
  de->add_option("--engine", engine, "lindblad or heom")->check(CLI::IsMember({"lindblad", "heom"}));
  auto* dg = app.add_subcommand("dimer-gate", "time-gated detection effects");
  add_common(dg);
  auto* ci = app.add_subcommand("chain-impact", "sink-readout impact on homogeneous chains");
  add_common(ci);
  auto* cb = app.add_subcommand("chain-bounds", "theorem checks along chain trajectories");
  add_common(cb);
  auto* co = app.add_subcommand("chain-optimizers", "optimal trapping and sensitivity states");
  add_common(co);
  auto* lc = app.add_subcommand("lightcone", "support-restricted profiles and envelope fit");
  add_common(lc);
  lc->add_option("--ratio", lc_ratio, "J/E_R");
  auto* vf = app.add_subcommand("verify", "randomized theorem corpus");
  add_common(vf);
  vf->add_option("--instances", instances, "number of random chains");
  vf->add_option("--seed", seed, "master seed");
  vf->add_option("--falsify", falsify, "instances that get state sampling");
  vf->add_option("--samples", samples, "sampled states per falsification instance");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << app.help();
    return kUsage;
  }

  try {
    const Context ctx = make_context(common, out);
    if (di->parsed()) return cmd_dimer_impact(ctx, regime, ratio, deep);
    if (de->parsed()) return cmd_dimer_efficiency(ctx, engine);
    if (dg->parsed()) return cmd_dimer_gate(ctx);
    if (ci->parsed()) return cmd_chain_impact(ctx);
    if (cb->parsed()) return cmd_chain_bounds(ctx);
    if (co->parsed()) return cmd_chain_optimizers(ctx);
    if (lc->parsed()) return cmd_lightcone(ctx, lc_ratio);
    if (vf->parsed()) return cmd_verify(ctx, instances, seed, falsify, samples);
  } catch (const CLI::ValidationError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace cohimpact::cli
