#include "cohimpact/dimer.hpp"

#include <cmath>
#include <sstream>

#include "cohimpact/errors.hpp"
#include "cohimpact/impact.hpp"
#include "cohimpact/quadrature.hpp"

namespace cohimpact::dimer {

void DimerParams::validate() const {
  for (double r : {gamma_d, gamma_a, kappa_a, dephasing})
    if (!(r >= 0.0) || !std::isfinite(r)) throw ConfigError("dimer rates must be finite and nonnegative");
  if (!std::isfinite(detuning) || !std::isfinite(coupling)) throw ConfigError("dimer energies must be finite");
  if (bath) bath->validate();
}

SiteBasisLabels labels() { return {{"g", "D", "A", "s"}, {D, A}}; }

Matrix hamiltonian(double detuning, double coupling) {
  Matrix h = Matrix::Zero(4, 4);
  h(D, D) = 0.5 * detuning;
  h(A, A) = -0.5 * detuning;
  h(D, A) = coupling;
  h(A, D) = coupling;
  return h;
}

namespace {

std::vector<Matrix> loss_jumps(const DimerParams& p) {
  std::vector<Matrix> j;
  if (p.gamma_d > 0.0) j.push_back(std::sqrt(p.gamma_d) * ket_bra(4, G, D));
  if (p.gamma_a > 0.0) j.push_back(std::sqrt(p.gamma_a) * ket_bra(4, G, A));
  if (p.kappa_a > 0.0) j.push_back(std::sqrt(p.kappa_a) * ket_bra(4, S, A));
  return j;
}

}  // namespace

LindbladModel build_lindblad(const DimerParams& p) {
  p.validate();
  LindbladModel m{hamiltonian(p.detuning, p.coupling), loss_jumps(p), labels()};
  if (p.dephasing > 0.0) {
    m.jumps.push_back(std::sqrt(p.dephasing) * projector(4, D));
    m.jumps.push_back(std::sqrt(p.dephasing) * projector(4, A));
  }
  return m;
}

HeomModel build_heom(const DimerParams& p, int depth, Terminator terminator) {
  p.validate();
  if (!p.bath) throw ConfigError("HEOM engine needs a Drude-Lorentz bath specification");
  HeomModel m;
  m.hamiltonian = hamiltonian(p.detuning, p.coupling);
  m.couplings = {projector(4, D), projector(4, A)};
  m.baths = {*p.bath, *p.bath};
  m.depth = depth;
  m.terminator = terminator;
  m.jumps = loss_jumps(p);
  m.labels = labels();
  return m;
}

Model build_dimer(const DimerParams& p, Engine engine, int depth) {
  if (engine == Engine::heom) return build_heom(p, depth);
  return build_lindblad(p);
}

double mixing_angle(double detuning, double coupling) { return 0.5 * std::atan2(2.0 * coupling, detuning); }

double exciton_splitting(double detuning, double coupling) {
  return std::sqrt(detuning * detuning + 4.0 * coupling * coupling);
}

Matrix site_state(Index slot) { return projector(4, slot); }

Matrix plus_state() {
  Vector psi = Vector::Zero(4);
  psi(D) = psi(A) = 1.0 / std::sqrt(2.0);
  return pure_density(psi);
}

Matrix minus_state() {
  Vector psi = Vector::Zero(4);
  psi(D) = 1.0 / std::sqrt(2.0);
  psi(A) = -1.0 / std::sqrt(2.0);
  return pure_density(psi);
}

Matrix trap_effect_rate(const DimerParams& p) { return p.kappa_a * projector(4, A); }

Effects effective_operators(const Model& model, const DimerParams& p) {
  const Matrix mt = trap_effect_rate(p);
  if (const auto* lm = std::get_if<LindbladModel>(&model))
    return {resolvent_effect(*lm, mt, 1, kDonor), resolvent_effect(*lm, mt, 2, kDonor)};
  const auto& hm = std::get<HeomModel>(model);
  return {heom_resolvent_effect(hm, mt, 1, kDonor), heom_resolvent_effect(hm, mt, 2, kDonor)};
}

namespace {

void require_donor_state(const Matrix& rho0) {
  DensityState checked(rho0);
  if (rho0.rows() != 4) throw DimensionError("dimer states are 4x4");
  const Matrix inside = embed_block(extract_block(rho0, kDonor), kDonor, 4);
  if (max_abs(rho0 - inside) > 1e-12) throw PreconditionError("initial state must live on {D, A}");
}

double expect(const Matrix& m, const Matrix& rho) { return (m * rho).trace().real(); }

}  // namespace

Efficiency efficiency(const Effects& e, const Matrix& rho0) {
  require_donor_state(rho0);
  const double eta = expect(e.m_eta, rho0);
  const double eta_free = expect(e.m_eta, dephase(rho0));
  return {eta, eta_free, eta - eta_free};
}

TransferTime transfer_time(const Effects& e, const Matrix& rho0) {
  const Efficiency eff = efficiency(e, rho0);
  if (eff.eta < 1e-12 || eff.eta_free < 1e-12)
    throw PreconditionError("transfer time undefined: efficiency below 1e-12");
  TransferTime t;
  t.n_tau = expect(e.m_tau, rho0);
  t.n_tau_free = expect(e.m_tau, dephase(rho0));
  t.tau = t.n_tau / eff.eta;
  t.tau_free = t.n_tau_free / eff.eta_free;
  t.delta = t.tau - t.tau_free;
  return t;
}

BoundReport coherence_bounds(const Effects& e, const Matrix& rho0) {
  BoundReport r;
  r.eff = efficiency(e, rho0);
  r.c_eta = impact_of(e.m_eta);
  r.c_tau = impact_of(e.m_tau);
  r.eta_slack = r.c_eta - std::abs(r.eff.delta);
  r.eta_holds = r.eta_slack >= -1e-9;
  r.time.n_tau = expect(e.m_tau, rho0);
  r.time.n_tau_free = expect(e.m_tau, dephase(rho0));
  r.n_slack = r.c_tau - std::abs(r.time.n_tau - r.time.n_tau_free);
  r.n_holds = r.n_slack >= -1e-9;
  if (r.eff.eta >= 1e-12 && r.eff.eta_free >= 1e-12) {
    r.time.tau = r.time.n_tau / r.eff.eta;
    r.time.tau_free = r.time.n_tau_free / r.eff.eta_free;
    r.time.delta = r.time.tau - r.time.tau_free;
  }
  r.tau_applicable = r.eff.eta_free > r.c_eta && r.eff.eta >= 1e-12;
  if (r.tau_applicable) {
    r.tau_bound = (r.c_tau + r.time.tau_free * r.c_eta) / (r.eff.eta_free - r.c_eta);
    r.tau_slack = r.tau_bound - std::abs(r.time.delta);
    r.tau_holds = r.tau_slack >= -1e-9;
  }
  return r;
}

double gamma_eff(double reorganization, double kt, double omega_c) {
  return 4.0 * reorganization * kt / omega_c;
}

double reorganization_for(double gamma, double kt, double omega_c) {
  return gamma * omega_c / (4.0 * kt);
}

WeightProfile WeightProfile::constant(double value) {
  return {"constant", [value](double) { return value; }};
}

WeightProfile WeightProfile::linear_ramp(double w0, double w1, double length) {
  return {"linear_ramp", [w0, w1, length](double tau) { return w0 + (w1 - w0) * tau / length; }};
}

WeightProfile WeightProfile::exponential(double w0, double rate) {
  return {"exponential", [w0, rate](double tau) { return w0 * std::exp(-rate * tau); }};
}

Matrix gate_effect(const Model& model, const DimerParams& p, const GateSpec& spec) {
  if (!std::holds_alternative<LindbladModel>(model))
    throw UnsupportedError("gate effects need a Markovian (Lindblad) engine");
  return gate_effect(std::get<LindbladModel>(model), p, spec);
}

Matrix gate_effect(const LindbladModel& model, const DimerParams& p, const GateSpec& spec) {
  if (spec.length < 0.0 || spec.start < 0.0) throw ConfigError("gate start and length must be >= 0");
  if (!spec.weight.w) throw ConfigError("gate weight profile is empty");
  for (int k = 0; k <= 100; ++k) {
    const double w = spec.weight.w(spec.length * k / 100.0);
    if (!(w >= 0.0 && w <= 1.0)) throw ConfigError("gate weight must lie in [0, 1]");
  }
  const Matrix llj = spec.channel == Channel::A ? Matrix(p.gamma_a * projector(4, A))
                                                : Matrix(p.gamma_d * projector(4, D));
  Matrix m = integrate_heisenberg(model, llj, spec.length, spec.weight.w);
  const double lmin = hermitian_eigenvalues(m).minCoeff();
  if (lmin < -1e-9) {
    std::ostringstream os;
    os << "gate effect has negative eigenvalue " << lmin;
    throw NumericalError(os.str());
  }
  return m;
}

std::vector<Matrix> coarse_grain(const std::vector<Matrix>& effects, const Eigen::MatrixXd& v) {
  if (v.cols() != static_cast<Index>(effects.size()))
    throw DimensionError("coarse-graining matrix needs one column per effect");
  if (v.size() > 0 && v.minCoeff() < 0.0) throw ConfigError("coarse-graining matrix has negative entries");
  std::vector<Matrix> out;
  for (Index k = 0; k < v.rows(); ++k) {
    Matrix m = Matrix::Zero(effects.front().rows(), effects.front().cols());
    for (Index j = 0; j < v.cols(); ++j) m += v(k, j) * effects[static_cast<std::size_t>(j)];
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<DpiRow> dpi_check(const LindbladModel& model, const std::vector<Matrix>& effects,
                              const Eigen::MatrixXd& v, std::span<const double> times) {
  const std::vector<Matrix> merged = coarse_grain(effects, v);
  std::vector<std::vector<double>> c_in;
  for (const Matrix& e : effects) {
    std::vector<double> c;
    for (const ImpactPoint& p : impact_from_series(heisenberg_evolve(model, e, times))) c.push_back(p.value);
    c_in.push_back(std::move(c));
  }
  std::vector<DpiRow> rows;
  for (Index k = 0; k < v.rows(); ++k) {
    const auto series = impact_from_series(heisenberg_evolve(model, merged[static_cast<std::size_t>(k)], times));
    for (std::size_t t = 0; t < times.size(); ++t) {
      double rhs = 0.0;
      for (Index j = 0; j < v.cols(); ++j) rhs += v(k, j) * c_in[static_cast<std::size_t>(j)][t];
      rows.push_back({times[t], k, series[t].value, rhs});
    }
  }
  return rows;
}

std::vector<SweepRow> sweep_enaqt(const DimerParams& base, std::span<const double> gammas,
                                  Engine engine, int depth) {
  std::vector<SweepRow> rows;
  for (double g : gammas) {
    DimerParams p = base;
    if (engine == Engine::lindblad) {
      p.dephasing = g;
    } else {
      if (!p.bath) throw ConfigError("HEOM sweep needs a bath");
      p.bath->reorganization = reorganization_for(g, p.bath->temperature, p.bath->cutoff);
    }
    const Effects e = effective_operators(build_dimer(p, engine, depth), p);
    rows.push_back({g, "plus", coherence_bounds(e, plus_state())});
    rows.push_back({g, "minus", coherence_bounds(e, minus_state())});
  }
  return rows;
}

}  // namespace cohimpact::dimer
