#include "cohimpact/heom.hpp"

#include <cmath>
#include <algorithm>
#include <exception>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include <omp.h>

#include <Eigen/SparseLU>
#include <unsupported/Eigen/KroneckerProduct>

#include "cohimpact/errors.hpp"
#include "cohimpact/parallel.hpp"
#include "cohimpact/units.hpp"

namespace cohimpact {

namespace {

constexpr cplx kI(0.0, 1.0);

bool is_diagonal(const Matrix& m) { return max_abs(offdiag_part(m)) == 0.0; }

void add_dense_block(std::vector<Eigen::Triplet<cplx>>& trip, const Matrix& blk, Index row0,
                     Index col0, cplx scale) {
  for (Index c = 0; c < blk.cols(); ++c)
    for (Index r = 0; r < blk.rows(); ++r)
      if (blk(r, c) != cplx(0.0)) trip.emplace_back(row0 + r, col0 + c, scale * blk(r, c));
}

}  // namespace

void DrudeLorentzBath::validate() const {
  if (!(reorganization >= 0.0) || !(cutoff > 0.0) || !(temperature > 0.0) || matsubara < 0)
    throw ConfigError("Drude-Lorentz bath needs E_R >= 0, gamma_c > 0, T > 0, N_k >= 0");
}

BathExpansion bath_expansion(const DrudeLorentzBath& bath, double warn_fraction) {
  bath.validate();
  const double er = bath.reorganization, g = bath.cutoff, kt = bath.temperature;
  const double beta = 1.0 / kt;
  BathExpansion e;
  e.terms.push_back({cplx(er * g / std::tan(0.5 * beta * g), -er * g), g});
  for (int k = 1; k <= bath.matsubara; ++k) {
    const double nu = 2.0 * units::kPi * k * kt;
    if (std::abs(nu - g) < 1e-9 * g)
      throw ConfigError("Matsubara frequency coincides with the Drude cutoff; shift T or gamma_c");
    e.terms.push_back({cplx(4.0 * er * g * kt * nu / (nu * nu - g * g), 0.0), nu});
  }
  const double total = 2.0 * er * kt / g;
  double captured = 0.0;
  for (const BathExponent& t : e.terms) captured += t.amplitude.real() / t.rate;
  e.residual = total - captured;
  if (total > 0.0 && std::abs(e.residual) > warn_fraction * total) {
    std::ostringstream os;
    os << "N_k=" << bath.matsubara << " leaves " << 100.0 * e.residual / total
       << "% of the zero-frequency noise weight in the Matsubara tail";
    e.warnings.push_back(os.str());
  }
  return e;
}

cplx correlation_sum(const BathExpansion& e, double t) {
  cplx s = 0.0;
  for (const BathExponent& term : e.terms) s += term.amplitude * std::exp(-term.rate * t);
  return s;
}

void HeomModel::validate() const {
  require_square(hamiltonian, "Hamiltonian");
  if (!is_hermitian(hamiltonian)) throw StateError("Hamiltonian is not Hermitian");
  if (couplings.size() != baths.size()) throw ConfigError("need one coupling operator per bath");
  for (const Matrix& v : couplings) {
    if (v.rows() != dim() || v.cols() != dim()) throw DimensionError("coupling operator dimension mismatch");
    if (!is_hermitian(v)) throw StateError("coupling operator is not Hermitian");
  }
  for (const DrudeLorentzBath& b : baths) b.validate();
  if (depth < 1) throw ConfigError("hierarchy depth must be >= 1");
  for (const Matrix& j : jumps)
    if (j.rows() != dim() || j.cols() != dim()) throw DimensionError("jump operator dimension mismatch");
}

LindbladModel HeomModel::markov_part() const { return {hamiltonian, jumps, labels}; }

std::size_t Hierarchy::count(int modes, int depth) {
  // C(depth + modes, modes), saturating.
  long double c = 1.0L;
  for (int i = 1; i <= modes; ++i) c = c * (depth + i) / i;
  if (c > 1e18L) return static_cast<std::size_t>(-1);
  return static_cast<std::size_t>(std::llround(static_cast<double>(c)));
}

Hierarchy::Hierarchy(int modes, int depth) : modes_(modes), depth_(depth), count_(1) {
  const std::size_t k = static_cast<std::size_t>(modes);
  if (k == 0) return;
  std::map<std::vector<int>, long> slot;
  std::vector<int> n(k, 0);
  // Tier by tier; within a tier the first mode counts down fastest.
  std::function<void(std::size_t, int)> rec = [&](std::size_t pos, int left) {
    if (pos + 1 == k) {
      n[pos] = left;
      slot.emplace(n, static_cast<long>(indices_.size() / k));
      indices_.insert(indices_.end(), n.begin(), n.end());
      n[pos] = 0;
      return;
    }
    for (int v = left; v >= 0; --v) {
      n[pos] = v;
      rec(pos + 1, left - v);
    }
    n[pos] = 0;
  };
  for (int tier = 0; tier <= depth; ++tier) rec(0, tier);
  count_ = indices_.size() / k;
  up_.assign(count_ * k, -1);
  down_.assign(count_ * k, -1);
  std::vector<int> m(k);
  for (std::size_t s = 0; s < count_; ++s) {
    const auto row = index(s);
    for (std::size_t j = 0; j < k; ++j) {
      m.assign(row.begin(), row.end());
      m[j] += 1;
      if (auto it = slot.find(m); it != slot.end()) up_[s * k + j] = it->second;
      m[j] -= 2;
      if (m[j] >= 0) down_[s * k + j] = slot.at(m);
    }
  }
}

HeomGenerator::HeomGenerator(const HeomModel& model, const MarkovGenerator& sys,
                             std::vector<Matrix> couplings, Index d)
    : d_(d),
      sys_(sys),
      v_(std::move(couplings)),
      hier_([&] {
        int modes = 0;
        for (const DrudeLorentzBath& b : model.baths) modes += 1 + b.matsubara;
        const std::size_t n = Hierarchy::count(modes, model.depth);
        const std::size_t d2 = static_cast<std::size_t>(d * d);
        if (n == static_cast<std::size_t>(-1) || n > kHeomScalarBudget / d2) {
          std::ostringstream os;
          os << "hierarchy needs " << n << " ADOs of size " << d2
             << ", above the 2^26 scalar budget; reduce the depth or N_k";
          throw ConfigError(os.str());
        }
        return Hierarchy(modes, model.depth);
      }()) {
  for (std::size_t b = 0; b < model.baths.size(); ++b) {
    const BathExpansion e = bath_expansion(model.baths[b]);
    residual_.push_back(model.terminator == Terminator::markovian_closure ? e.residual : 0.0);
    for (const BathExponent& t : e.terms) {
      const double a = std::abs(t.amplitude);
      if (a == 0.0) throw ConfigError("bath with zero reorganization energy has no hierarchy; drop it");
      modes_.push_back({static_cast<int>(b), t.amplitude, t.rate, std::sqrt(a), 1.0 / std::sqrt(a)});
    }
  }
  diagonal_ = true;
  for (const Matrix& v : v_) diagonal_ = diagonal_ && is_diagonal(v);
  if (diagonal_) {
    const Index d2 = d * d;
    closure_ = Eigen::VectorXcd::Zero(d2);
    for (std::size_t b = 0; b < v_.size(); ++b) {
      Eigen::VectorXcd c(d2);
      for (Index j = 0; j < d; ++j)
        for (Index i = 0; i < d; ++i) c(i + j * d) = v_[b](i, i) - v_[b](j, j);
      closure_ += residual_[b] * c.cwiseAbs2().cast<cplx>();
      comm_.push_back(std::move(c));
    }
    for (const Mode& m : modes_) {
      const Matrix& v = v_[static_cast<std::size_t>(m.bath)];
      Eigen::VectorXcd dn(d2);
      for (Index j = 0; j < d; ++j)
        for (Index i = 0; i < d; ++i) dn(i + j * d) = m.c * v(i, i) - std::conj(m.c) * v(j, j);
      down_.push_back(std::move(dn));
    }
  }
}

HeomGenerator::HeomGenerator(const HeomModel& model)
    : HeomGenerator((model.validate(), model), MarkovGenerator(model.markov_part()), model.couplings,
                    model.dim()) {}

HeomGenerator HeomGenerator::restricted(const HeomModel& model, std::span<const Index> idx) {
  model.validate();
  const LindbladModel markov = model.markov_part();
  check_block_invariance(markov, idx);
  std::vector<Matrix> v;
  std::vector<bool> in(static_cast<std::size_t>(model.dim()), false);
  for (Index i : idx) in[static_cast<std::size_t>(i)] = true;
  for (const Matrix& c : model.couplings) {
    for (Index col = 0; col < c.cols(); ++col)
      for (Index r = 0; r < c.rows(); ++r)
        if (in[static_cast<std::size_t>(r)] != in[static_cast<std::size_t>(col)] && c(r, col) != cplx(0.0))
          throw PreconditionError("coupling operator connects the block to its complement");
    v.push_back(extract_block(c, idx));
  }
  return HeomGenerator(model, MarkovGenerator::restricted(markov, idx), std::move(v),
                       static_cast<Index>(idx.size()));
}

void HeomGenerator::apply_range(const cplx* in, cplx* out, std::size_t begin, std::size_t end) const {
  const Index d = d_, d2 = d * d;
  const int nm = hier_.modes();
  Matrix x(d, d), sys(d, d);
  Matrix tmp(d, d);
  for (std::size_t p = begin; p < end; ++p) {
    const auto n = hier_.index(p);
    const cplx* src = in + static_cast<Index>(p) * d2;
    cplx* dst = out + static_cast<Index>(p) * d2;
    std::copy(src, src + d2, x.data());
    sys_.apply(x, sys);
    double damp = 0.0;
    for (int k = 0; k < nm; ++k) damp += n[static_cast<std::size_t>(k)] * modes_[static_cast<std::size_t>(k)].nu;

    if (diagonal_) {
      for (Index e = 0; e < d2; ++e) dst[e] = sys.data()[e] - (damp + closure_(e)) * x.data()[e];
      for (int k = 0; k < nm; ++k) {
        const Mode& m = modes_[static_cast<std::size_t>(k)];
        const double nk = n[static_cast<std::size_t>(k)];
        const long up = hier_.raise(p, k);
        if (up >= 0) {
          const cplx s = -kI * (std::sqrt(nk + 1.0) * m.up_scale);
          const cplx* y = in + up * d2;
          const cplx* c = comm_[static_cast<std::size_t>(m.bath)].data();
          for (Index e = 0; e < d2; ++e) dst[e] += s * c[e] * y[e];
        }
        const long dn = hier_.lower(p, k);
        if (dn >= 0) {
          const cplx s = -kI * (std::sqrt(nk) * m.down_scale);
          const cplx* y = in + dn * d2;
          const cplx* c = down_[static_cast<std::size_t>(k)].data();
          for (Index e = 0; e < d2; ++e) dst[e] += s * c[e] * y[e];
        }
      }
      continue;
    }

    Eigen::Map<Matrix> o(dst, d, d);
    o = sys - damp * x;
    for (std::size_t b = 0; b < v_.size(); ++b) {
      if (residual_[b] == 0.0) continue;
      const Matrix& v = v_[b];
      tmp = v * x - x * v;
      o -= residual_[b] * (v * tmp - tmp * v);
    }
    for (int k = 0; k < nm; ++k) {
      const Mode& m = modes_[static_cast<std::size_t>(k)];
      const Matrix& v = v_[static_cast<std::size_t>(m.bath)];
      const double nk = n[static_cast<std::size_t>(k)];
      const long up = hier_.raise(p, k);
      if (up >= 0) {
        Eigen::Map<const Matrix> y(in + up * d2, d, d);
        o += (-kI * (std::sqrt(nk + 1.0) * m.up_scale)) * (v * y - y * v);
      }
      const long dn = hier_.lower(p, k);
      if (dn >= 0) {
        Eigen::Map<const Matrix> y(in + dn * d2, d, d);
        o += (-kI * (std::sqrt(nk) * m.down_scale)) * (m.c * (v * y) - std::conj(m.c) * (y * v));
      }
    }
  }
}

void HeomGenerator::apply_serial(const cplx* in, cplx* out) const { apply_range(in, out, 0, hier_.size()); }

void HeomGenerator::apply(const cplx* in, cplx* out) const {
  const std::size_t n = hier_.size();
  const int threads = worker_count();
  if (threads <= 1 || n < 64) {
    apply_range(in, out, 0, n);
    return;
  }
#pragma omp parallel num_threads(threads)
  {
    const std::size_t nt = static_cast<std::size_t>(omp_get_num_threads());
    const std::size_t id = static_cast<std::size_t>(omp_get_thread_num());
    const std::size_t chunk = (n + nt - 1) / nt;
    const std::size_t b = std::min(n, id * chunk);
    const std::size_t e = std::min(n, b + chunk);
    apply_range(in, out, b, e);
  }
}

SparseMatrix HeomGenerator::assemble() const {
  const Index d = d_, d2 = d * d;
  const Matrix id = Matrix::Identity(d, d);
  const Matrix s = sys_.superoperator();
  std::vector<Matrix> comm, down;
  Matrix closure = Matrix::Zero(d2, d2);
  for (std::size_t b = 0; b < v_.size(); ++b) {
    const Matrix& v = v_[b];
    comm.push_back(Eigen::kroneckerProduct(id, v).eval() - Eigen::kroneckerProduct(v.transpose(), id).eval());
    closure += residual_[b] * comm.back() * comm.back();
  }
  for (const Mode& m : modes_) {
    const Matrix& v = v_[static_cast<std::size_t>(m.bath)];
    down.push_back(m.c * Eigen::kroneckerProduct(id, v).eval() -
                   std::conj(m.c) * Eigen::kroneckerProduct(v.transpose(), id).eval());
  }
  std::vector<Eigen::Triplet<cplx>> trip;
  const int nm = hier_.modes();
  for (std::size_t p = 0; p < hier_.size(); ++p) {
    const auto n = hier_.index(p);
    const Index row = static_cast<Index>(p) * d2;
    double damp = 0.0;
    for (int k = 0; k < nm; ++k) damp += n[static_cast<std::size_t>(k)] * modes_[static_cast<std::size_t>(k)].nu;
    Matrix diag = s - closure;
    diag.diagonal().array() -= damp;
    add_dense_block(trip, diag, row, row, 1.0);
    for (int k = 0; k < nm; ++k) {
      const Mode& m = modes_[static_cast<std::size_t>(k)];
      const double nk = n[static_cast<std::size_t>(k)];
      if (const long up = hier_.raise(p, k); up >= 0)
        add_dense_block(trip, comm[static_cast<std::size_t>(m.bath)], row, up * d2,
                        -kI * (std::sqrt(nk + 1.0) * m.up_scale));
      if (const long dn = hier_.lower(p, k); dn >= 0)
        add_dense_block(trip, down[static_cast<std::size_t>(k)], row, dn * d2,
                        -kI * (std::sqrt(nk) * m.down_scale));
    }
  }
  SparseMatrix a(size(), size());
  a.setFromTriplets(trip.begin(), trip.end());
  return a;
}

namespace {

// Smallest index set containing seed that the forward flow cannot leave.
std::vector<Index> forward_closure(const HeomModel& model, const std::set<Index>& seed) {
  const Index d = model.dim();
  std::vector<const Matrix*> ops{&model.hamiltonian};
  for (const Matrix& v : model.couplings) ops.push_back(&v);
  for (const Matrix& j : model.jumps) ops.push_back(&j);
  Matrix k = Matrix::Zero(d, d);
  for (const Matrix& j : model.jumps) k.noalias() += j.adjoint() * j;
  ops.push_back(&k);
  std::set<Index> c = seed;
  bool grew = true;
  while (grew) {
    grew = false;
    for (const Matrix* op : ops)
      for (Index col : std::set<Index>(c))
        for (Index r = 0; r < d; ++r)
          if ((*op)(r, col) != cplx(0.0) && c.insert(r).second) grew = true;
  }
  return {c.begin(), c.end()};
}

}  // namespace

std::vector<Matrix> propagate_heom(const HeomModel& model, const Matrix& rho0,
                                   std::span<const double> times, const HeomOptions& opt,
                                   OdeStats* stats) {
  model.validate();
  DensityState checked(rho0);
  const Index d = model.dim();
  if (rho0.rows() != d) throw DimensionError("initial state dimension mismatch");
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (times[k] < 0.0) throw PreconditionError("negative output time");
    if (k > 0 && times[k] < times[k - 1]) throw PreconditionError("output times must increase");
  }
  std::set<Index> seed;
  for (Index j = 0; j < d; ++j)
    for (Index i = 0; i < d; ++i)
      if (rho0(i, j) != cplx(0.0)) {
        seed.insert(i);
        seed.insert(j);
      }
  std::vector<Index> block = forward_closure(model, seed);
  bool use_block = static_cast<Index>(block.size()) < d;
  if (use_block) {
    try {
      check_block_invariance(model.markov_part(), block);
    } catch (const PreconditionError&) {
      use_block = false;
    }
  }
  if (!use_block) {
    block.resize(static_cast<std::size_t>(d));
    for (Index i = 0; i < d; ++i) block[static_cast<std::size_t>(i)] = i;
  }
  const HeomGenerator gen = use_block ? HeomGenerator::restricted(model, block) : HeomGenerator(model);
  const Index s = gen.system_dim();
  const bool parallel = opt.parallel;
  auto rhs = [&gen, parallel](const Vector& y, Vector& dy) {
    if (parallel)
      gen.apply(y.data(), dy.data());
    else
      gen.apply_serial(y.data(), dy.data());
  };
  Dopri5<decltype(rhs)> ode(rhs, gen.size(), opt.ode);
  Vector y = Vector::Zero(gen.size());
  const Matrix r0 = extract_block(rho0, block);
  std::copy(r0.data(), r0.data() + s * s, y.data());
  std::vector<Matrix> out;
  double t = 0.0;
  for (double tk : times) {
    ode.advance(y, t, tk);
    t = tk;
    Matrix r = hermitian_part(Eigen::Map<const Matrix>(y.data(), s, s));
    const double err = std::abs(r.trace() - 1.0);
    if (err > 1e-8) {
      std::ostringstream os;
      os << "HEOM trace drifted by " << err << " at t=" << tk;
      throw NumericalError(os.str());
    }
    out.push_back(embed_block(r, block, d));
  }
  if (stats) *stats = ode.stats();
  return out;
}

HeisenbergSeries reconstruct_observable(const StatePropagator& propagate, const Matrix& m,
                                        std::span<const double> times,
                                        std::span<const Index> support) {
  HermitianObservable checked(m);
  const Index d = m.rows();
  const Index s = static_cast<Index>(support.size());
  if (s == 0) throw PreconditionError("empty probe support");
  // Probe list: diagonal k, then (+) and (i) superpositions for k < l.
  struct Probe {
    Index k, l;
    int kind;  // 0 diagonal, 1 real superposition, 2 imaginary superposition
  };
  std::vector<Probe> probes;
  for (Index a = 0; a < s; ++a) probes.push_back({support[a], support[a], 0});
  for (Index a = 0; a < s; ++a)
    for (Index b = a + 1; b < s; ++b) {
      probes.push_back({support[a], support[b], 1});
      probes.push_back({support[a], support[b], 2});
    }
  const std::size_t nt = times.size();
  std::vector<std::vector<double>> y(probes.size(), std::vector<double>(nt));
  std::exception_ptr failure;
  const int threads = worker_count();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (std::size_t q = 0; q < probes.size(); ++q) {
    try {
      const Probe& p = probes[q];
      Vector psi = Vector::Zero(d);
      psi(p.k) = 1.0;
      if (p.kind == 1) psi(p.l) = 1.0;
      if (p.kind == 2) psi(p.l) = kI;
      psi /= psi.norm();
      const std::vector<Matrix> traj = propagate(pure_density(psi), times);
      if (traj.size() != nt) throw NumericalError("probe trajectory has the wrong length");
      for (std::size_t t = 0; t < nt; ++t) y[q][t] = (m * traj[t]).trace().real();
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  HeisenbergSeries out;
  out.times.assign(times.begin(), times.end());
  out.provenance = "probe reconstruction";
  for (std::size_t t = 0; t < nt; ++t) {
    Matrix mt = Matrix::Zero(d, d);
    for (Index a = 0; a < s; ++a) mt(support[a], support[a]) = y[static_cast<std::size_t>(a)][t];
    std::size_t q = static_cast<std::size_t>(s);
    for (Index a = 0; a < s; ++a)
      for (Index b = a + 1; b < s; ++b) {
        const Index k = support[a], l = support[b];
        const double yk = mt(k, k).real(), yl = mt(l, l).real();
        const double c1 = 2.0 * y[q][t] - yk - yl;
        const double c2 = 2.0 * y[q + 1][t] - yk - yl;
        q += 2;
        mt(k, l) = cplx(c1, -c2) / 2.0;
        mt(l, k) = std::conj(mt(k, l));
      }
    out.matrices.push_back(std::move(mt));
  }
  return out;
}

HeisenbergSeries reconstruct_observable(const HeomModel& model, const Matrix& m,
                                        std::span<const double> times,
                                        std::span<const Index> support, const HeomOptions& opt) {
  StatePropagator prop = [&model, opt](const Matrix& rho0, std::span<const double> ts) {
    return propagate_heom(model, rho0, ts, opt);
  };
  HeisenbergSeries s = reconstruct_observable(prop, m, times, support);
  s.provenance = "HEOM probe reconstruction";
  return s;
}

Matrix heom_resolvent_effect(const HeomModel& model, const Matrix& mtilde, int order,
                             std::span<const Index> support) {
  if (order != 1 && order != 2) throw PreconditionError("resolvent order must be 1 or 2");
  HermitianObservable checked(mtilde);
  const Index d = model.dim();
  if (mtilde.rows() != d) throw DimensionError("effect dimension mismatch");
  const Matrix mb = extract_block(mtilde, support);
  if (max_abs(mtilde - embed_block(mb, support, d)) > 1e-12 * std::max(1.0, max_abs(mtilde)))
    throw PreconditionError("effect is not supported on the requested block");
  const HeomGenerator gen = HeomGenerator::restricted(model, support);
  const MarkovGenerator markov = MarkovGenerator::restricted(model.markov_part(), support);
  if (max_abs(markov.loss()) == 0.0)
    throw StabilityError("extended generator has no loss channel: eigenvalue 0 (trace is conserved)");
  const SparseMatrix a = -gen.assemble();
  Eigen::SparseLU<SparseMatrix> lu;
  lu.compute(a);
  if (lu.info() != Eigen::Success) throw StabilityError("extended generator is singular (LU failed)");
  {
    Vector v = Vector::Ones(a.rows()) / std::sqrt(static_cast<double>(a.rows()));
    double growth = 0.0;
    for (int it = 0; it < 30; ++it) {
      Vector w = lu.solve(v);
      growth = w.norm();
      if (!std::isfinite(growth)) break;
      v = w / growth;
    }
    if (!std::isfinite(growth) || 1.0 / growth < 1e-9) {
      std::ostringstream os;
      os << "extended generator is not strictly stable: eigenvalue estimate " << -1.0 / growth;
      throw StabilityError(os.str());
    }
  }
  const Index s = gen.system_dim();
  Matrix eff(s, s);
  for (Index l = 0; l < s; ++l)
    for (Index k = 0; k < s; ++k) {
      Vector rhs = Vector::Zero(a.rows());
      rhs(k + l * s) = 1.0;
      Vector x = lu.solve(rhs);
      const double res = (a * x - rhs).norm();
      if (!(res <= 1e-9)) throw NumericalError("extended resolvent residual too large");
      if (order == 2) x = lu.solve(Vector(x));
      const Matrix slot0 = Eigen::Map<const Matrix>(x.data(), s, s);
      eff(l, k) = (mb * slot0).trace();
    }
  if (!is_hermitian(eff, 1e-8)) throw NumericalError("extended resolvent effect is not Hermitian");
  return embed_block(hermitian_part(eff), support, d);
}

}  // namespace cohimpact
