#include "cohimpact/chain.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>

#include "cohimpact/errors.hpp"
#include "cohimpact/parallel.hpp"
#include "cohimpact/quadrature.hpp"
#include "cohimpact/units.hpp"

namespace cohimpact::chain {

ChainParams ChainParams::homogeneous(int n, double coupling, double recombination, double trap,
                                     double dephasing) {
  ChainParams p;
  p.n = n;
  p.energies.assign(static_cast<std::size_t>(std::max(n, 0)), 0.0);
  p.couplings.assign(static_cast<std::size_t>(std::max(n - 1, 0)), coupling);
  p.recombination = recombination;
  p.trap = trap;
  p.dephasing = dephasing;
  return p;
}

void ChainParams::validate() const {
  if (n < 2) throw ConfigError("chain needs N >= 2 sites");
  if (energies.size() != static_cast<std::size_t>(n))
    throw ConfigError("chain needs N site energies");
  if (couplings.size() != static_cast<std::size_t>(n - 1))
    throw ConfigError("chain needs N-1 couplings");
  for (double r : {recombination, trap, dephasing})
    if (!(r >= 0.0) || !std::isfinite(r)) throw ConfigError("chain rates must be finite and nonnegative");
  for (double e : energies)
    if (!std::isfinite(e)) throw ConfigError("chain site energies must be finite");
  for (double j : couplings)
    if (!std::isfinite(j)) throw ConfigError("chain couplings must be finite");
}

SiteBasisLabels labels(int n) {
  SiteBasisLabels l;
  l.names = {"g", "s"};
  for (int k = 1; k <= n; ++k) l.names.push_back(std::to_string(k));
  l.donor = donor_indices(n);
  return l;
}

std::vector<Index> donor_indices(int n) {
  std::vector<Index> idx;
  for (int k = 1; k <= n; ++k) idx.push_back(slot(k));
  return idx;
}

LindbladModel build_chain(const ChainParams& p) {
  p.validate();
  const Index d = p.n + 2;
  LindbladModel m;
  m.hamiltonian = Matrix::Zero(d, d);
  for (int k = 1; k <= p.n; ++k) m.hamiltonian(slot(k), slot(k)) = p.energies[k - 1];
  for (int k = 1; k < p.n; ++k) {
    m.hamiltonian(slot(k), slot(k + 1)) = p.couplings[k - 1];
    m.hamiltonian(slot(k + 1), slot(k)) = p.couplings[k - 1];
  }
  if (p.recombination > 0.0)
    for (int k = 1; k <= p.n; ++k)
      m.jumps.push_back(std::sqrt(p.recombination) * ket_bra(d, G, slot(k)));
  if (p.dephasing > 0.0)
    for (int k = 1; k <= p.n; ++k) m.jumps.push_back(std::sqrt(p.dephasing) * projector(d, slot(k)));
  if (p.trap > 0.0) m.jumps.push_back(std::sqrt(p.trap) * ket_bra(d, S, slot(p.n)));
  m.labels = labels(p.n);
  return m;
}

double gamma_phi_ohmic(double reorganization, double kt, double omega_c) {
  if (omega_c <= 0.0) throw ConfigError("cutoff frequency must be positive");
  return 2.0 * units::kPi * kt * reorganization / omega_c;
}

std::vector<Matrix> trap_effect_series(const LindbladModel& model, std::span<const double> times,
                                       const PropagationOptions& opt) {
  const Index d = model.dim();
  const Matrix sink = projector(d, S);
  HeisenbergSeries hs = heisenberg_evolve(model, sink, times, opt);
  for (Matrix& m : hs.matrices) m -= sink;
  return hs.matrices;
}

Matrix trap_effect(const LindbladModel& model, double t) {
  if (t < 0.0) throw ConfigError("time must be >= 0");
  const double ts[1] = {t};
  return trap_effect_series(model, ts).front();
}

Matrix trap_effect_infinite(const ChainParams& p) {
  const LindbladModel model = build_chain(p);
  const Index d = model.dim();
  const auto donor = donor_indices(p.n);
  return resolvent_effect(model, p.trap * projector(d, slot(p.n)), 1, donor);
}

TrapReport analyze(const Matrix& donor_block, double t) {
  require_square(donor_block, "trap effect");
  TrapReport r;
  r.t = t;
  r.m = hermitian_part(donor_block);
  r.d = dephase(r.m);
  r.b = r.m - r.d;
  const HermitianEigen e = hermitian_eigen(r.m);
  const Index n = r.m.rows();
  r.eta_max = e.values(n - 1);
  r.witness = e.vectors.col(n - 1);
  fix_phase(r.witness);
  r.eta_incoh = r.d.diagonal().real().maxCoeff(&r.witness_site);
  r.c = operator_norm(r.b);
  return r;
}

TrapReport analyze_full(const Matrix& m_full, int n, double t) {
  return analyze(extract_block(m_full, donor_indices(n)), t);
}

namespace {

Check make_check(double margin, double tol = kBoundTol) { return {true, margin >= -tol, margin}; }

Check not_applicable() { return {false, true, 0.0}; }

double expectation(const Matrix& m, const Vector& psi) { return psi.dot(m * psi).real(); }

double populations_entropy_bits(const Vector& psi) {
  double s = 0.0;
  for (Index i = 0; i < psi.size(); ++i) {
    const double p = std::norm(psi(i));
    if (p > kEntropyClamp) s -= p * std::log2(p);
  }
  return s;
}

}  // namespace

Check theorem1_check(const TrapReport& r) { return make_check(r.c - (r.eta_max - r.eta_incoh)); }

double advantage(double delta, double b) {
  delta = std::abs(delta);
  b = std::abs(b);
  if (b == 0.0) return 0.0;
  // b^2 / (sqrt(b^2 + D^2/4) + D/2), arranged so tiny b does not underflow.
  return b * (b / (std::hypot(b, 0.5 * delta) + 0.5 * delta));
}

double advantage_near_degenerate(double delta, double b) {
  if (b <= 0.0) throw PreconditionError("near-degenerate expansion needs b > 0");
  const double x = delta / b;
  return b * (1.0 - 0.5 * x + x * x / 8.0 - std::pow(x, 4) / 128.0);
}

double advantage_well_separated(double delta, double b) {
  if (delta <= 0.0) throw PreconditionError("well-separated expansion needs Delta > 0");
  const double y = b / delta;
  return delta * (y * y - std::pow(y, 4));
}

bool Corollary2::pass() const {
  return lower_bound.pass && advantage.pass && near_degenerate.pass && well_separated.pass;
}

Corollary2 corollary2_bounds(const TrapReport& r, Index n, Index m) {
  const Index size = r.m.rows();
  if (n == m || n < 0 || m < 0 || n >= size || m >= size)
    throw PreconditionError("pairwise bound needs two distinct donor sites");
  Corollary2 c;
  const double dn = r.d(n, n).real(), dm = r.d(m, m).real();
  c.delta = std::abs(dn - dm);
  c.b = std::abs(r.b(n, m));
  c.f = advantage(c.delta, c.b);
  c.lambda_plus = 0.5 * (dn + dm) + std::hypot(0.5 * c.delta, c.b);
  c.lower_bound = make_check(r.eta_max - c.lambda_plus);
  c.advantage = make_check(r.eta_max - std::max(dn, dm) - c.f);
  // Remainders are checked relative to the scale of (Delta, b).
  const double tol = 1e-12 * (c.delta + c.b) + 1e-300;
  if (c.b > 0.0 && c.delta <= 2.0 * c.b) {
    const double rem = c.f - advantage_near_degenerate(c.delta, c.b);
    const double cap = c.b * std::pow(c.delta / c.b, 6) / 1024.0;
    c.near_degenerate = make_check(std::min(rem, cap - rem), tol);
  } else {
    c.near_degenerate = not_applicable();
  }
  if (c.delta > 0.0 && c.delta >= 2.0 * c.b) {
    const double rem = c.f - advantage_well_separated(c.delta, c.b);
    const double cap = 2.0 * c.delta * std::pow(c.b / c.delta, 6);
    c.well_separated = make_check(std::min(rem, cap - rem), tol);
  } else {
    c.well_separated = not_applicable();
  }
  return c;
}

bool Theorem3::pass() const {
  return l1_bound.pass && l1_bound_c.pass && support_bound.pass && entropy_bound.pass;
}

Theorem3 theorem3_check(const TrapReport& r, const Vector& psi) {
  if (psi.size() != r.m.rows()) throw DimensionError("state and effect dimensions differ");
  Theorem3 t;
  t.delta = std::max(0.0, expectation(r.m, psi) - r.eta_incoh);
  t.c_max = r.b.cwiseAbs().maxCoeff();
  t.l1 = l1_coherence(psi);
  t.support = 0;
  for (Index i = 0; i < psi.size(); ++i)
    if (std::abs(psi(i)) > 0.0) ++t.support;
  // Pure input: S(rho) = 0, so C_rel is the Shannon entropy of |psi_n|^2.
  t.c_rel = populations_entropy_bits(psi);
  // Multiplied through by c_max or C so that B = 0 stays well defined.
  t.l1_bound = make_check(t.c_max * t.l1 - t.delta);
  t.l1_bound_c = make_check(r.c * t.l1 - t.delta);
  t.support_bound = make_check(t.c_max * (static_cast<double>(t.support) - 1.0) - t.delta);
  t.entropy_bound = make_check(2.0 * std::log(2.0) * r.c * r.c * t.c_rel - t.delta * t.delta);
  return t;
}

Check theorem3_entropy_check(const TrapReport& r, const Matrix& rho) {
  DensityState checked(rho);
  const double delta = std::max(0.0, (r.m * rho).trace().real() - r.eta_incoh);
  const double crel = relative_entropy_coherence(rho);
  return make_check(2.0 * std::log(2.0) * r.c * r.c * crel - delta * delta);
}

Corollary4 corollary4_check(const TrapReport& r, const Vector& psi) {
  Corollary4 c;
  c.delta = std::max(0.0, expectation(r.m, psi) - r.eta_incoh);
  c.ipr = ipr(psi);
  const double fro2 = r.b.squaredNorm();
  const double n = static_cast<double>(r.m.rows());
  c.bound_f = fro2 > 0.0 ? 1.0 - c.delta * c.delta / fro2 : (c.delta > 0.0 ? -1.0 : 1.0);
  c.bound_n = r.c > 0.0 ? 1.0 - c.delta * c.delta / (n * r.c * r.c) : (c.delta > 0.0 ? -1.0 : 1.0);
  c.frobenius = make_check(fro2 * (1.0 - c.ipr) - c.delta * c.delta);
  c.uniform = make_check(n * r.c * r.c * (1.0 - c.ipr) - c.delta * c.delta);
  return c;
}

Theorem5 theorem5_check(const TrapReport& r) {
  Theorem5 t;
  const Eigen::VectorXd dd = r.d.diagonal().real();
  t.k = r.witness_site;
  double second = -std::numeric_limits<double>::infinity();
  for (Index i = 0; i < dd.size(); ++i)
    if (i != t.k) second = std::max(second, dd(i));
  t.gap = dd(t.k) - second;
  t.deficit = 1.0 - std::norm(r.witness(t.k));
  if (!(t.gap > 1e-12 && r.c < t.gap)) {
    t.check = not_applicable();
    return t;
  }
  t.bound = std::pow(r.c / (t.gap - r.c), 2);
  t.check = make_check(t.bound - t.deficit, 1e-10);
  return t;
}

namespace {

Optimizer describe(Vector psi, double value, Index degeneracy) {
  fix_phase(psi);
  Optimizer o;
  o.psi = psi;
  o.eigenvalue = value;
  const double n = static_cast<double>(psi.size());
  o.l1_ratio = n > 1.0 ? l1_coherence(psi) / (n - 1.0) : 0.0;
  o.ipr = ipr(psi);
  for (Index i = 0; i < psi.size(); ++i) o.populations.push_back(std::norm(psi(i)));
  o.degeneracy = degeneracy;
  return o;
}

}  // namespace

OptimizerReport optimizer_analysis(const Matrix& donor_block) {
  const TrapReport r = analyze(donor_block, 0.0);
  const Index n = r.m.rows();
  constexpr double tie = 1e-10;
  OptimizerReport out;

  const HermitianEigen em = hermitian_eigen(r.m);
  Index deg = 0;
  for (Index i = 0; i < n; ++i)
    if (em.values(i) >= em.values(n - 1) - tie) ++deg;
  out.eta = describe(em.vectors.col(n - 1), em.values(n - 1), deg);

  const HermitianEigen eb = hermitian_eigen(r.b);
  // Largest |eigenvalue|; a +/- tie goes to the positive end.
  const double lo = eb.values(0), hi = eb.values(n - 1);
  const Index pick = std::abs(lo) > std::abs(hi) + tie ? 0 : n - 1;
  const double target = eb.values(pick);
  deg = 0;
  for (Index i = 0; i < n; ++i)
    if (std::abs(eb.values(i) - target) <= tie) ++deg;
  out.sensitivity = describe(eb.vectors.col(pick), target, deg);
  return out;
}

namespace {

double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  return std::exp(u(rng));
}

}  // namespace

Instance random_instance(std::mt19937_64& rng, int n_min, int n_max) {
  std::uniform_int_distribution<int> pick_n(n_min, n_max);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Instance in;
  ChainParams& p = in.params;
  p.n = pick_n(rng);
  const double wn = units::kRadPsPerWavenumber;
  // A third of the instances get strong disorder.
  const double spread = unit(rng) < 1.0 / 3.0 ? 1500.0 : 150.0;
  for (int k = 0; k < p.n; ++k) p.energies.push_back((2.0 * unit(rng) - 1.0) * spread * wn);
  for (int k = 0; k + 1 < p.n; ++k) {
    const double j = (20.0 + 130.0 * unit(rng)) * wn;
    p.couplings.push_back(unit(rng) < 0.5 ? j : -j);
  }
  p.recombination = unit(rng) < 0.2 ? 0.0 : log_uniform(rng, 0.01, 1.0);
  p.trap = log_uniform(rng, 0.1, 5.0);
  p.dephasing = unit(rng) < 0.2 ? 0.0 : log_uniform(rng, 0.1, 100.0);
  // The infinite-time limit is drawn only with Gamma > 0: strong disorder can
  // leave near-dark eigenstates with decay rates below roundoff otherwise.
  const bool infinite = p.recombination > 0.0 && unit(rng) < 0.25;
  in.t = infinite ? std::numeric_limits<double>::infinity() : log_uniform(rng, 0.02, 5.0);
  return in;
}

namespace {

struct InstanceResult {
  double thm1 = 1e300, cor2 = 1e300, thm3 = 1e300, cor4 = 1e300, thm5 = 1e300;
  bool thm5_applicable = false;
  std::size_t violations = 0;
  double sink = 0.0;
  std::size_t states = 0;
  std::size_t counterexamples = 0;
};

void fold(double& slot_value, const Check& c, std::size_t& violations) {
  if (!c.applicable) return;
  slot_value = std::min(slot_value, c.margin);
  if (!c.pass) ++violations;
}

InstanceResult run_instance(const Instance& in, std::uint64_t seed, std::size_t samples) {
  InstanceResult res;
  const LindbladModel model = build_chain(in.params);
  const auto donor = donor_indices(in.params.n);
  Matrix block;
  if (std::isinf(in.t)) {
    block = extract_block(trap_effect_infinite(in.params), donor);
  } else {
    const Matrix full = trap_effect(model, in.t);
    block = extract_block(full, donor);
    const Index d = model.dim();
    const Matrix oracle = integrate_heisenberg(model, in.params.trap * projector(d, slot(in.params.n)),
                                               in.t, [](double) { return 1.0; }, donor);
    res.sink = max_abs(full - oracle);
    // Rows and columns of g and s must vanish.
    res.sink = std::max(res.sink, max_abs(full - embed_block(block, donor, d)));
  }
  const TrapReport r = analyze(block, in.t);
  const Index n = r.m.rows();

  fold(res.thm1, theorem1_check(r), res.violations);
  for (Index a = 0; a < n; ++a)
    for (Index b = a + 1; b < n; ++b) {
      const Corollary2 c = corollary2_bounds(r, a, b);
      for (const Check* k : {&c.lower_bound, &c.advantage, &c.near_degenerate, &c.well_separated})
        fold(res.cor2, *k, res.violations);
    }
  const Theorem3 t3 = theorem3_check(r, r.witness);
  for (const Check* k : {&t3.l1_bound, &t3.l1_bound_c, &t3.support_bound, &t3.entropy_bound})
    fold(res.thm3, *k, res.violations);
  const Corollary4 c4 = corollary4_check(r, r.witness);
  fold(res.cor4, c4.frobenius, res.violations);
  fold(res.cor4, c4.uniform, res.violations);
  const Theorem5 t5 = theorem5_check(r);
  res.thm5_applicable = t5.check.applicable;
  fold(res.thm5, t5.check, res.violations);

  std::mt19937_64 rng(seed);
  // Mixed states for the entropic form: witness blended with Wishart noise.
  for (int k = 0; k < 4; ++k) {
    const double w = 0.25 * (k + 1);
    const Matrix rho = w * pure_density(r.witness) +
                       (1.0 - w) * random_density(n, rng()).matrix();
    fold(res.thm3, theorem3_entropy_check(r, rho), res.violations);
  }

  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t s = 0; s < samples; ++s) {
    Vector psi;
    if (s % 2 == 0) {
      psi = random_pure_vector(n, rng);
    } else {
      const double eps = std::pow(10.0, -3.0 * unit(rng));
      psi = r.witness + eps * random_pure_vector(n, rng);
      psi.normalize();
    }
    ++res.states;
    bool bad = expectation(r.m, psi) > r.eta_max + kBoundTol;
    const Theorem3 a = theorem3_check(r, psi);
    const Corollary4 b = corollary4_check(r, psi);
    bad = bad || !a.pass() || !b.pass();
    if (bad) ++res.counterexamples;
  }
  return res;
}

}  // namespace

CorpusSummary run_corpus(std::size_t instances, std::uint64_t seed, std::size_t falsify,
                         std::size_t samples) {
  std::vector<InstanceResult> results(instances);
  std::vector<Instance> corpus;
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < instances; ++i) corpus.push_back(random_instance(rng));

  std::exception_ptr failure;
  std::mutex guard;
  const long count = static_cast<long>(instances);
#pragma omp parallel for schedule(dynamic) num_threads(worker_count())
  for (long i = 0; i < count; ++i) {
    try {
      const auto u = static_cast<std::size_t>(i);
      results[u] = run_instance(corpus[u], chunk_seed(seed, u), u < falsify ? samples : 0);
    } catch (...) {
      std::lock_guard<std::mutex> lock(guard);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  CorpusSummary sum;
  sum.instances = instances;
  for (const InstanceResult& r : results) {
    sum.violations += r.violations;
    sum.min_thm1 = std::min(sum.min_thm1, r.thm1);
    sum.min_cor2 = std::min(sum.min_cor2, r.cor2);
    sum.min_thm3 = std::min(sum.min_thm3, r.thm3);
    sum.min_cor4 = std::min(sum.min_cor4, r.cor4);
    sum.min_thm5 = std::min(sum.min_thm5, r.thm5);
    if (r.thm5_applicable) ++sum.thm5_applicable;
    sum.max_sink_identity = std::max(sum.max_sink_identity, r.sink);
    sum.falsification_states += r.states;
    sum.counterexamples += r.counterexamples;
  }
  return sum;
}

}  // namespace cohimpact::chain
