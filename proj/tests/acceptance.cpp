// One line per acceptance criterion. Exit status is nonzero if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "cohimpact/chain.hpp"
#include "cohimpact/cli.hpp"
#include "cohimpact/dimer.hpp"
#include "cohimpact/heom.hpp"
#include "cohimpact/impact.hpp"
#include "cohimpact/lightcone.hpp"
#include "cohimpact/quadrature.hpp"
#include "cohimpact/units.hpp"
#include "common.hpp"

using namespace cohimpact;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Tolerances and budgets.
constexpr double kAnchorTol = 1e-8;
constexpr double kSampleRatio = 0.99;
constexpr double kSampleExcess = 1e-10;
constexpr double kReconTol = 1e-8;
constexpr double kEngineTol = 0.02;
constexpr double kSelfConvTol = 1e-3;
constexpr double kRateTol = 1e-9;
constexpr double kSlackTol = -1e-9;
constexpr double kPullbackTol = 1e-6;
constexpr double kEnaqtMargin = 0.01;
constexpr double kTheoremTol = 1e-9;
constexpr double kSinkTol = 1e-7;
constexpr double kPovmTol = 1e-9;
constexpr double kDpiTol = 1e-12;
constexpr double kR2 = 0.9;

dimer::DimerParams transport(double dephasing) {
  dimer::DimerParams p;
  p.detuning = units::wavenumber(100);
  p.coupling = units::wavenumber(100);
  p.kappa_a = 1.0;
  p.gamma_a = p.gamma_d = 0.1;
  p.dephasing = dephasing;
  return p;
}

Outcome ac1() {
  dimer::DimerParams p;
  p.coupling = units::wavenumber(100);
  const double j = p.coupling;
  const LindbladModel m = dimer::build_lindblad(p);
  const auto ts = linspace(0.0, 2 * units::kPi / j, 2001);
  const auto c = impact_from_series(heisenberg_evolve(m, projector(4, dimer::A), ts));
  double err = 0.0;
  for (const auto& pt : c) err = std::max(err, std::abs(pt.value - 0.5 * std::abs(std::sin(2 * j * pt.t))));
  return {err <= kAnchorTol, fmt("max |C - |sin 2Jt|/2| = %.2e (tol %.0e)", err, kAnchorTol)};
}

Outcome ac2() {
  double worst = 2.0, excess = -1e300;
  double worst_by_dim[5] = {2, 2, 2, 2, 2};
  for (int k = 0; k < 50; ++k) {
    const Index d = 2 + k % 3;
    const LindbladModel m = testutil::random_model(d, 5000 + k);
    std::mt19937_64 rng(k);
    const Matrix obs = random_hermitian(d, rng);
    const Matrix mt = heisenberg_evolve(m, obs, std::vector<double>{0.5}).matrices[0];
    const double sp = impact_of(mt);
    const double bf = brute_force_impact(mt, 100000, 100 + k);
    worst = std::min(worst, bf / sp);
    worst_by_dim[d] = std::min(worst_by_dim[d], bf / sp);
    excess = std::max(excess, bf - sp);
  }
  return {worst >= kSampleRatio && excess <= kSampleExcess,
          fmt("min ratio %.4f (d=2 %.4f, d=3 %.4f, d=4 %.4f; need %.2f), max excess %.1e", worst,
              worst_by_dim[2], worst_by_dim[3], worst_by_dim[4], kSampleRatio, excess)};
}

Outcome ac3() {
  double err = 0.0;
  for (int k = 0; k < 20; ++k) {
    const Index d = 3 + k % 2;
    const LindbladModel m = testutil::random_model(d, 900 + k);
    StatePropagator prop = [&](const Matrix& rho0, std::span<const double> t) { return propagate_state(m, rho0, t); };
    std::mt19937_64 rng(k);
    const Matrix obs = random_hermitian(d, rng);
    std::vector<Index> all(d);
    std::iota(all.begin(), all.end(), Index{0});
    const auto ts = linspace(0.0, 2.0, 9);
    const auto rec = reconstruct_observable(prop, obs, ts, all);
    const auto ref = heisenberg_evolve(m, obs, ts);
    for (std::size_t i = 0; i < ts.size(); ++i) err = std::max(err, max_abs(rec.matrices[i] - ref.matrices[i]));
  }
  return {err <= kReconTol, fmt("max error %.2e over 20 models (tol %.0e)", err, kReconTol)};
}

std::vector<double> donor_population(const cli::ImpactScenario& s, int depth, int nk, std::span<const double> ts) {
  dimer::DimerParams p = s.params;
  p.bath->matsubara = nk;
  const auto states = propagate_heom(dimer::build_heom(p, depth), dimer::site_state(dimer::D), ts);
  std::vector<double> out;
  for (const Matrix& r : states) out.push_back(r(dimer::D, dimer::D).real());
  return out;
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double e = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) e = std::max(e, std::abs(a[k] - b[k]));
  return e;
}

Outcome ac4() {
  const Config none = Config::parse("");
  cli::ImpactScenario s = cli::dimer_impact_scenario(none, cli::Regime::fast, 10.0, false);
  const auto ts = linspace(0.0, 1.0, 201);
  const auto desk = donor_population(s, 5, 3, ts);
  const auto shallow = donor_population(s, 3, 3, ts);
  const auto wide = donor_population(s, 5, 5, ts);

  dimer::DimerParams lp = s.params;
  lp.dephasing = dimer::gamma_eff(lp.bath->reorganization, lp.bath->temperature, lp.bath->cutoff);
  lp.bath.reset();
  std::vector<double> lind;
  for (const Matrix& r : propagate_state(dimer::build_lindblad(lp), dimer::site_state(dimer::D), ts))
    lind.push_back(r(dimer::D, dimer::D).real());

  const double engine = max_diff(desk, lind), depth = max_diff(desk, shallow), nk = max_diff(desk, wide);
  return {engine <= kEngineTol && depth <= kSelfConvTol && nk <= kSelfConvTol,
          fmt("HEOM(L=5,Nk=3) vs Lindblad gamma_eff=%.4f/ps: %.4f (tol %.2f); depth 3->5: %.1e, "
              "Nk 3->5: %.2e (tol %.0e); rho_DD(1ps) %.4f vs %.4f",
              lp.dephasing, engine, kEngineTol, depth, nk, kSelfConvTol, desk.back(), lind.back())};
}

Outcome ac5() {
  dimer::DimerParams p;
  p.detuning = units::wavenumber(100);
  p.kappa_a = 1.0;
  p.gamma_a = 0.1;
  p.gamma_d = 0.1;  // keeps the uncoupled donor block decaying
  const auto e = dimer::effective_operators(dimer::build_lindblad(p), p);
  const Matrix rho = dimer::site_state(dimer::A);
  const double eta = dimer::efficiency(e, rho).eta, tau = dimer::transfer_time(e, rho).tau;
  const double de = std::abs(eta - 1.0 / 1.1), dt = std::abs(tau - 1.0 / 1.1);
  return {de <= kRateTol && dt <= kRateTol, fmt("eta %.10f tau %.10f ps, errors %.1e %.1e", eta, tau, de, dt)};
}

Outcome ac6() {
  const auto gammas = logspace(0.1, 1000.0, 12);
  const auto rows = dimer::sweep_enaqt(transport(0.0), gammas, dimer::Engine::lindblad);
  double slack = 1e300;
  for (const auto& r : rows) {
    slack = std::min({slack, r.report.eta_slack, r.report.n_slack});
    if (r.report.tau_applicable) slack = std::min(slack, r.report.tau_slack);
  }
  double pull = 0.0;
  for (double g : gammas) {
    const dimer::DimerParams p = transport(g);
    const LindbladModel m = dimer::build_lindblad(p);
    const Matrix meta = dimer::effective_operators(m, p).m_eta;
    const Matrix q = integrate_heisenberg(m, dimer::trap_effect_rate(p), 40.0 / p.gamma_a,
                                          [](double) { return 1.0; }, dimer::kDonor);
    pull = std::max(pull, max_abs(extract_block(q - meta, dimer::kDonor)));
  }
  return {slack >= kSlackTol && pull <= kPullbackTol,
          fmt("min slack %.3e over %zu rows (tol %.0e); pull-back error %.1e (tol %.0e)", slack, rows.size(),
              kSlackTol, pull, kPullbackTol)};
}

Outcome ac7() {
  const auto gammas = logspace(1.0, 1000.0, 25);
  const auto rows = dimer::sweep_enaqt(transport(0.0), gammas, dimer::Engine::lindblad);
  std::vector<double> free;
  for (std::size_t k = 0; k < rows.size(); k += 2) free.push_back(rows[k].report.eff.eta_free);
  const auto best = std::max_element(free.begin(), free.end());
  const bool interior = best != free.begin() && best != free.end() - 1;
  const double lift = *best / std::max(free.front(), free.back()) - 1.0;
  return {interior && lift >= kEnaqtMargin,
          fmt("max eta_free %.4f at gamma %.3g/ps, endpoints %.4f %.4f, lift %.1f%%", *best,
              gammas[best - free.begin()], free.front(), free.back(), 100 * lift)};
}

chain::CorpusSummary corpus;

Outcome ac8() {
  corpus = chain::run_corpus(200, 2024, 20, 100000);
  const double lo = std::min({corpus.min_thm1, corpus.min_cor2, corpus.min_thm3, corpus.min_cor4,
                              corpus.thm5_applicable ? corpus.min_thm5 : 0.0});
  return {corpus.instances == 200 && corpus.violations == 0 && corpus.counterexamples == 0 && lo >= -kTheoremTol,
          fmt("%zu instances, %zu violations, %zu/%zu falsification counterexamples, min margin %.1e, "
              "thm5 applicable on %zu",
              corpus.instances, corpus.violations, corpus.counterexamples, corpus.falsification_states, lo,
              corpus.thm5_applicable)};
}

Outcome ac9() {
  double err = corpus.max_sink_identity;
  const double j = units::wavenumber(100);
  for (int n : {5, 10}) {
    const auto p = chain::ChainParams::homogeneous(n, j, 0.01, 1.0, chain::gamma_phi_ohmic(j / 10, units::kelvin(300), 100 * j));
    const LindbladModel m = chain::build_chain(p);
    const auto ts = linspace(0.0, 2.0, 5);
    const auto series = chain::trap_effect_series(m, ts);
    const Matrix rate = p.trap * projector(m.dim(), chain::slot(n));
    for (std::size_t k = 1; k < ts.size(); ++k) {
      const Matrix q = integrate_heisenberg(m, rate, ts[k], [](double) { return 1.0; }, chain::donor_indices(n));
      err = std::max(err, max_abs(series[k] - q));
    }
  }
  return {err <= kSinkTol, fmt("max sink-identity error %.1e (tol %.0e)", err, kSinkTol)};
}

Outcome ac10() {
  dimer::DimerParams p = transport(1.0);
  p.gamma_a = 10.0;
  p.gamma_d = 10.0;
  const LindbladModel m = dimer::build_lindblad(p);
  using dimer::Channel;
  using dimer::WeightProfile;

  double top = 0.0;
  for (double len : {0.05, 0.5, 5.0}) {
    const Matrix ma = gate_effect(m, p, {Channel::A, 0.0, len, WeightProfile::constant(1.0)});
    const Matrix md = gate_effect(m, p, {Channel::D, 0.0, len, WeightProfile::exponential(1.0, 2.0)});
    top = std::max(top, hermitian_eigenvalues(ma + md).maxCoeff());
  }

  const double t = 0.1, w0 = 0.8;
  const double inst = w0 * p.gamma_a * impact_of(heisenberg_evolve(m, projector(4, dimer::A), std::vector<double>{t}).matrices[0]);
  std::vector<double> errs;
  std::string orders;
  double last = 0.0;
  bool shrinking = true;
  for (double dt : {8e-3, 4e-3, 2e-3, 1e-3, 5e-4}) {
    const Matrix g = gate_effect(m, p, {Channel::A, 0.0, dt, WeightProfile::linear_ramp(w0, 0.0, 1.0)});
    const double c = impact_of(heisenberg_evolve(m, g, std::vector<double>{t}).matrices[0]) / dt;
    errs.push_back(std::abs(c - inst));
    if (errs.size() > 1) {
      const double q = std::log2(errs[errs.size() - 2] / errs.back());
      last = q;
      shrinking = shrinking && errs.back() < errs[errs.size() - 2];
      orders += fmt("%s%.2f", orders.empty() ? "" : " ", q);
    }
  }
  // Asymptotic order from the two finest gates.
  const bool first_order = shrinking && std::abs(last - 1.0) <= 0.1;

  const std::vector<Matrix> base{gate_effect(m, p, {Channel::A, 0.0, 0.2, WeightProfile::constant(1.0)}),
                                 gate_effect(m, p, {Channel::D, 0.0, 0.2, WeightProfile::constant(1.0)})};
  const std::vector<Matrix> effects{base[0], base[1], Matrix::Identity(4, 4) - base[0] - base[1]};
  const auto ts = linspace(0.0, 1.0, 11);
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double dpi = -1e300;
  for (int k = 0; k < 100; ++k) {
    const Index rows = 1 + k % 3;
    Eigen::MatrixXd v(rows, 3);
    for (Index i = 0; i < v.size(); ++i) v.data()[i] = u(rng);
    v.array().rowwise() /= v.colwise().sum().array();
    for (const auto& r : dimer::dpi_check(m, effects, v, ts)) dpi = std::max(dpi, r.lhs - r.rhs);
  }
  return {top <= 1.0 + kPovmTol && first_order && dpi <= kDpiTol,
          fmt("POVM top eigenvalue %.12f; small-gate errors %.2e..%.2e, observed orders %s; "
              "DPI worst lhs-rhs %.1e over 100 V",
              top, errs.front(), errs.back(), orders.c_str(), dpi)};
}

Outcome ac11() {
  const Config none = Config::parse("");
  const cli::ChainScenario s = cli::chain_scenario(none, {50});
  const int n = 50;
  const chain::ChainParams p = s.params(n, 1.0);
  const std::vector<double> ds{10, 20, 30, 40};
  std::vector<std::vector<Index>> sets;
  for (double d : ds) sets.push_back({chain::slot(n - int(d) - 1), chain::slot(n - int(d))});
  const auto times = linspace(0.0, 2.0, 121);
  const double threshold = 1e-3, eps = 1e-4, t_trunc = 1.0;
  const LindbladModel model = chain::build_chain(p);
  const Index sink[1] = {chain::S};
  const auto prof = lightcone::restricted_profile(model, projector(model.dim(), chain::S), sink, sets, times);
  std::vector<lightcone::EnvelopeSample> samples;
  std::vector<double> arrivals;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    for (std::size_t k = 0; k < times.size(); ++k)
      if (prof.values[i][k] < threshold) samples.push_back({ds[i] + 1.0, times[k], prof.values[i][k]});
    arrivals.push_back(lightcone::arrival_time(times, prof.values[i], threshold));
  }
  const auto fit = lightcone::fit_envelope(samples, 1.0);
  const bool arrived = std::all_of(arrivals.begin(), arrivals.end(), [](double a) { return std::isfinite(a); });
  const auto af = arrived ? lightcone::linear_fit(ds, arrivals) : lightcone::LinearFit{};
  const int radius = lightcone::truncation_radius(fit, t_trunc, eps, 1.0);
  const auto rep = lightcone::truncation_experiment(p, sets.front(), linspace(0.0, t_trunc, 21), radius, eps);
  return {fit.mu > 0.0 && fit.r2 >= kR2 && arrived && af.r2 >= kR2 && rep.pass,
          fmt("mu %.3f, fit R2 %.4f, arrival R2 %.5f (slope %.4f ps/site), truncation r=%d dev %.1e <= 3eps=%.0e",
              fit.mu, fit.r2, af.r2, af.slope, radius, rep.max_deviation, 3 * eps)};
}

Outcome ac12() {
  const Config none = Config::parse("");
  bool ok = true;
  std::string detail;
  for (cli::Regime r : {cli::Regime::fast, cli::Regime::intermediate}) {
    std::vector<double> th;
    for (double ratio : {10.0, 1.0, 0.2}) {
      const auto curve = cli::dimer_impact_curve(cli::dimer_impact_scenario(none, r, ratio, false));
      th.push_back(cli::half_envelope_time(curve.t, curve.c));
    }
    ok = ok && th[0] > th[1] && th[1] > th[2];
    detail += fmt("%s t_half %.4f > %.4f > %.4f ps; ", r == cli::Regime::fast ? "fast" : "intermediate", th[0],
                  th[1], th[2]);
  }
  const cli::ChainScenario s = cli::chain_scenario(none, {5, 10, 50});
  const auto ts = linspace(0.0, 2.0, 201);
  std::vector<double> means;
  for (int n : s.sizes) {
    const LindbladModel m = chain::build_chain(s.params(n, 10.0));
    std::vector<double> c;
    for (const auto& pt : impact_from_series(heisenberg_evolve(m, projector(m.dim(), chain::S), ts))) c.push_back(pt.value);
    means.push_back(cli::early_mean(ts, c, 2.0));
  }
  ok = ok && means[0] > means[1] && means[1] > means[2];
  detail += fmt("chain early mean N=5,10,50: %.4f > %.4f > %.4f", means[0], means[1], means[2]);
  return {ok, detail};
}

struct Criterion {
  const char* id;
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

// Optional arguments select criteria by id, e.g. `acceptance AC5 AC10`.
int main(int argc, char** argv) {
  const std::vector<std::string> only(argv + 1, argv + argc);
  const std::vector<Criterion> all{
      {"AC1", "closed-dimer anchor", 1, ac1},
      {"AC2", "sampling vs spectral impact", 120, ac2},
      {"AC3", "probe reconstruction", 60, ac3},
      {"AC4", "HEOM vs effective Lindblad", 600, ac4},
      {"AC5", "rate competition", 1, ac5},
      {"AC6", "bound suite", 300, ac6},
      {"AC7", "environment-assisted maximum", 120, ac7},
      {"AC8", "chain theorem corpus", 600, ac8},
      {"AC9", "sink identity", 600, ac9},
      {"AC10", "gate elements", 120, ac10},
      {"AC11", "light cone", 600, ac11},
      {"AC12", "figure trends", 600, ac12},
  };
  int failed = 0;
  int ran = 0;
  for (const auto& c : all) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    ++ran;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool pass = o.pass && sec <= c.budget_s;
    failed += !pass;
    std::printf("%-4s %s  %s: %s [%.1f s, budget %.0f s]\n", c.id, pass ? "PASS" : "FAIL", c.name, o.detail.c_str(),
                sec, c.budget_s);
    std::fflush(stdout);
  }
  std::printf("%d of %d criteria passed\n", ran - failed, ran);
  return failed ? 1 : 0;
}
