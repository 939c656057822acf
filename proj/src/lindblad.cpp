#include "cohimpact/lindblad.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "cohimpact/errors.hpp"

namespace cohimpact {

namespace {

constexpr cplx kI(0.0, 1.0);

bool single_entry(const Matrix& op, Index& i, Index& j) {
  Index count = 0;
  for (Index c = 0; c < op.cols(); ++c)
    for (Index r = 0; r < op.rows(); ++r)
      if (op(r, c) != cplx(0.0)) {
        ++count;
        i = r;
        j = c;
      }
  return count == 1;
}

void add_kron(std::vector<Eigen::Triplet<cplx>>& trip, const Matrix& a, const Matrix& b,
              cplx scale) {
  // Entries of (a kron b) * scale, skipping exact zeros.
  const Index n = b.rows();
  for (Index ac = 0; ac < a.cols(); ++ac)
    for (Index ar = 0; ar < a.rows(); ++ar) {
      const cplx av = a(ar, ac);
      if (av == cplx(0.0)) continue;
      for (Index bc = 0; bc < b.cols(); ++bc)
        for (Index br = 0; br < b.rows(); ++br) {
          const cplx bv = b(br, bc);
          if (bv == cplx(0.0)) continue;
          trip.emplace_back(ar * n + br, ac * n + bc, scale * av * bv);
        }
    }
}

}  // namespace

void LindbladModel::validate() const {
  require_square(hamiltonian, "Hamiltonian");
  if (!is_hermitian(hamiltonian)) throw StateError("Hamiltonian is not Hermitian");
  for (const Matrix& j : jumps)
    if (j.rows() != dim() || j.cols() != dim()) throw DimensionError("jump operator dimension mismatch");
  if (!labels.names.empty() && labels.dim() != dim())
    throw DimensionError("basis labels do not match model dimension");
}

MarkovGenerator::MarkovGenerator(const LindbladModel& model) {
  model.validate();
  const Index d = model.dim();
  loss_ = Matrix::Zero(d, d);
  for (const Matrix& j : model.jumps) {
    loss_.noalias() += j.adjoint() * j;
    add_jump(j);
  }
  heff_ = model.hamiltonian - 0.5 * kI * loss_;
}

void MarkovGenerator::add_jump(const Matrix& op) {
  Jump jp;
  if (max_abs(op) == 0.0) return;
  if (single_entry(op, jp.i, jp.j)) {
    jp.single = true;
    jp.weight = std::norm(op(jp.i, jp.j));
  }
  jp.op = op;
  jumps_.push_back(std::move(jp));
}

MarkovGenerator MarkovGenerator::restricted(const LindbladModel& model, std::span<const Index> idx) {
  check_block_invariance(model, idx);
  MarkovGenerator full(model);
  MarkovGenerator g;
  g.loss_ = extract_block(full.loss_, idx);
  g.heff_ = extract_block(model.hamiltonian, idx) - 0.5 * kI * g.loss_;
  for (const Matrix& j : model.jumps) g.add_jump(extract_block(j, idx));
  return g;
}

void MarkovGenerator::apply(const Matrix& rho, Matrix& out) const {
  out.noalias() = -kI * (heff_ * rho);
  out.noalias() += kI * (rho * heff_.adjoint());
  for (const Jump& j : jumps_) {
    if (j.single)
      out(j.i, j.i) += j.weight * rho(j.j, j.j);
    else
      out.noalias() += j.op * rho * j.op.adjoint();
  }
}

void MarkovGenerator::apply_adjoint(const Matrix& m, Matrix& out) const {
  out.noalias() = kI * (heff_.adjoint() * m);
  out.noalias() -= kI * (m * heff_);
  for (const Jump& j : jumps_) {
    if (j.single)
      out(j.j, j.j) += j.weight * m(j.i, j.i);
    else
      out.noalias() += j.op.adjoint() * m * j.op;
  }
}

Matrix MarkovGenerator::superoperator() const {
  const Index d = dim();
  const Matrix id = Matrix::Identity(d, d);
  Matrix s = -kI * Eigen::kroneckerProduct(id, heff_).eval();
  s += kI * Eigen::kroneckerProduct(heff_.conjugate(), id).eval();
  for (const Jump& j : jumps_) s += Eigen::kroneckerProduct(j.op.conjugate(), j.op).eval();
  return s;
}

SparseMatrix MarkovGenerator::sparse_superoperator(bool adjoint) const {
  const Index d = dim();
  const Matrix id = Matrix::Identity(d, d);
  std::vector<Eigen::Triplet<cplx>> trip;
  add_kron(trip, id, heff_, -kI);
  add_kron(trip, heff_.conjugate(), id, kI);
  for (const Jump& j : jumps_) add_kron(trip, j.op.conjugate(), j.op, 1.0);
  SparseMatrix s(d * d, d * d);
  s.setFromTriplets(trip.begin(), trip.end());
  if (adjoint) {
    SparseMatrix a = s.adjoint();
    return a;
  }
  return s;
}

void check_block_invariance(const LindbladModel& model, std::span<const Index> idx) {
  const Index d = model.dim();
  std::vector<bool> in(static_cast<std::size_t>(d), false);
  for (Index i : idx) {
    if (i < 0 || i >= d) throw PreconditionError("block index out of range");
    in[static_cast<std::size_t>(i)] = true;
  }
  Matrix k = Matrix::Zero(d, d);
  for (const Matrix& j : model.jumps) k.noalias() += j.adjoint() * j;
  const double scale = std::max({1.0, max_abs(model.hamiltonian), max_abs(k)});
  auto fail = [](const char* what) {
    throw PreconditionError(std::string("block is not invariant: ") + what);
  };
  for (Index c = 0; c < d; ++c) {
    if (!in[static_cast<std::size_t>(c)]) continue;
    for (Index r = 0; r < d; ++r) {
      if (in[static_cast<std::size_t>(r)]) continue;
      if (std::abs(model.hamiltonian(r, c)) > 1e-14 * scale) fail("Hamiltonian couples it out");
      if (std::abs(k(r, c)) > 1e-14 * scale) fail("loss operator couples it out");
    }
  }
  for (const Matrix& j : model.jumps)
    for (Index c = 0; c < d; ++c) {
      if (in[static_cast<std::size_t>(c)]) continue;
      for (Index r = 0; r < d; ++r)
        if (in[static_cast<std::size_t>(r)] && std::abs(j(r, c)) > 1e-14 * scale)
          fail("a jump feeds it from outside");
    }
}

Matrix build_generator(const LindbladModel& model) { return MarkovGenerator(model).superoperator(); }

Matrix adjoint_generator(const LindbladModel& model) {
  return MarkovGenerator(model).superoperator().adjoint();
}

Vector vec(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

Matrix unvec(const Vector& v, Index d) { return Eigen::Map<const Matrix>(v.data(), d, d); }

std::vector<Matrix> evolve_generator(const MarkovGenerator& gen, bool adjoint, const Matrix& x0,
                                     std::span<const double> times, const PropagationOptions& opt,
                                     OdeStats* stats) {
  const Index d = gen.dim();
  if (x0.rows() != d || x0.cols() != d) throw DimensionError("initial operator dimension mismatch");
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (times[k] < 0.0) throw PreconditionError("negative output time");
    if (k > 0 && times[k] < times[k - 1]) throw PreconditionError("output times must increase");
  }
  std::vector<Matrix> out;
  out.reserve(times.size());
  PropagationMethod method = opt.method;
  if (method == PropagationMethod::automatic)
    method = d * d <= kExponentialMaxDim2 ? PropagationMethod::exponential
                                          : PropagationMethod::integrator;

  if (method == PropagationMethod::exponential) {
    const Matrix s = adjoint ? Matrix(gen.superoperator().adjoint()) : gen.superoperator();
    // Uniform grids give step lengths that differ only by roundoff; reuse
    // the propagator when they agree to 1e-13 relative.
    std::vector<std::pair<double, Matrix>> cache;
    Vector v = vec(x0);
    double t = 0.0;
    for (double tk : times) {
      const double dt = tk - t;
      if (dt > 0.0) {
        const Matrix* e = nullptr;
        for (const auto& [h, m] : cache)
          if (std::abs(h - dt) <= 1e-13 * dt) e = &m;
        if (!e) {
          cache.emplace_back(dt, Matrix((dt * s).exp()));
          e = &cache.back().second;
        }
        v = (*e) * v;
        t = tk;
      }
      out.push_back(unvec(v, d));
    }
    return out;
  }

  auto rhs = [&gen, adjoint, d](const Vector& y, Vector& dy) {
    Eigen::Map<const Matrix> x(y.data(), d, d);
    Matrix r(d, d);
    if (adjoint)
      gen.apply_adjoint(x, r);
    else
      gen.apply(x, r);
    dy = Eigen::Map<const Vector>(r.data(), r.size());
  };
  Dopri5<decltype(rhs)> ode(rhs, d * d, opt.ode);
  Vector y = vec(x0);
  double t = 0.0;
  for (double tk : times) {
    ode.advance(y, t, tk);
    t = tk;
    out.push_back(unvec(y, d));
  }
  if (stats) *stats = ode.stats();
  return out;
}

std::vector<Matrix> propagate_state(const LindbladModel& model, const Matrix& rho0,
                                    std::span<const double> times, const PropagationOptions& opt,
                                    PropagationReport* report) {
  DensityState checked(rho0);
  MarkovGenerator gen(model);
  OdeStats stats;
  std::vector<Matrix> states = evolve_generator(gen, false, rho0, times, opt, &stats);
  PropagationReport rep;
  rep.ode = stats;
  const Index d = model.dim();
  rep.method = (opt.method == PropagationMethod::exponential ||
                (opt.method == PropagationMethod::automatic && d * d <= kExponentialMaxDim2))
                   ? "exponential"
                   : "integrator";
  rep.min_eigenvalue = 1.0;
  for (Matrix& rho : states) {
    rho = hermitian_part(rho);
    rep.max_trace_error = std::max(rep.max_trace_error, std::abs(rho.trace() - 1.0));
    rep.min_eigenvalue = std::min(rep.min_eigenvalue, hermitian_eigenvalues(rho).minCoeff());
  }
  rep.positivity_violation = rep.min_eigenvalue < -1e-7;
  if (rep.max_trace_error > 1e-8) {
    std::ostringstream os;
    os << "trace drifted by " << rep.max_trace_error << " during propagation";
    throw NumericalError(os.str());
  }
  if (report) *report = rep;
  return states;
}

HeisenbergSeries heisenberg_evolve(const LindbladModel& model, const Matrix& m,
                                   std::span<const double> times, const PropagationOptions& opt) {
  HermitianObservable checked(m);
  MarkovGenerator gen(model);
  HeisenbergSeries s;
  s.times.assign(times.begin(), times.end());
  s.matrices = evolve_generator(gen, true, m, times, opt);
  for (Matrix& mt : s.matrices) mt = hermitian_part(mt);
  s.provenance = "lindblad adjoint flow";
  return s;
}

double spectral_abscissa(const MarkovGenerator& gen) {
  Eigen::ComplexEigenSolver<Matrix> es(gen.superoperator(), false);
  if (es.info() != Eigen::Success) throw NumericalError("generator eigensolver failed");
  return es.eigenvalues().real().maxCoeff();
}

Matrix resolvent_effect(const LindbladModel& model, const Matrix& mtilde, int order,
                        std::span<const Index> support) {
  if (order != 1 && order != 2) throw PreconditionError("resolvent order must be 1 or 2");
  HermitianObservable checked(mtilde);
  const Index d = model.dim();
  if (mtilde.rows() != d) throw DimensionError("effect dimension mismatch");
  const Matrix outside = mtilde - embed_block(extract_block(mtilde, support), support, d);
  if (max_abs(outside) > 1e-12 * std::max(1.0, max_abs(mtilde)))
    throw PreconditionError("effect is not supported on the requested block");

  const MarkovGenerator gen = MarkovGenerator::restricted(model, support);
  const Index s = gen.dim();
  if (max_abs(gen.loss()) == 0.0)
    throw StabilityError("block generator has no loss channel: eigenvalue 0 (trace is conserved)");
  if (s * s <= 400) {
    Eigen::ComplexEigenSolver<Matrix> es(gen.superoperator(), false);
    if (es.info() != Eigen::Success) throw NumericalError("generator eigensolver failed");
    Index k = 0;
    es.eigenvalues().real().maxCoeff(&k);
    const cplx ev = es.eigenvalues()(k);
    if (ev.real() > -1e-9) {
      std::ostringstream os;
      os << "block generator is not strictly stable: eigenvalue " << ev.real() << (ev.imag() < 0 ? "" : "+")
         << ev.imag() << "i";
      throw StabilityError(os.str());
    }
  }

  const SparseMatrix a = -gen.sparse_superoperator(true);
  Eigen::SparseLU<SparseMatrix> lu;
  lu.compute(a);
  if (lu.info() != Eigen::Success) throw StabilityError("block generator is singular (LU failed)");

  if (s * s > 400) {
    // Inverse iteration estimates the smallest |eigenvalue| of -L^dagger.
    Vector v = Vector::Ones(s * s) / std::sqrt(static_cast<double>(s * s));
    double growth = 0.0;
    for (int it = 0; it < 30; ++it) {
      Vector w = lu.solve(v);
      growth = w.norm();
      if (!std::isfinite(growth)) break;
      v = w / growth;
    }
    if (!std::isfinite(growth) || 1.0 / growth < 1e-9) {
      std::ostringstream os;
      os << "block generator is not strictly stable: eigenvalue estimate " << -1.0 / growth;
      throw StabilityError(os.str());
    }
  }

  const Vector b = vec(extract_block(mtilde, support));
  Vector x = lu.solve(b);
  const double res = (a * x - b).norm();
  if (!(res <= 1e-10 * std::max(b.norm(), 1e-300) + 1e-14)) {
    std::ostringstream os;
    os << "resolvent residual " << res << " too large";
    throw NumericalError(os.str());
  }
  if (order == 2) x = lu.solve(Vector(x));
  Matrix block = unvec(x, s);
  if (!is_hermitian(block, 1e-8)) throw NumericalError("resolvent effect is not Hermitian");
  return embed_block(hermitian_part(block), support, d);
}

std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = a;
    return out;
  }
  for (std::size_t k = 0; k < n; ++k)
    out[k] = a + (b - a) * static_cast<double>(k) / static_cast<double>(n - 1);
  out.back() = b;
  return out;
}

std::vector<double> logspace(double a, double b, std::size_t n) {
  if (!(a > 0.0 && b > 0.0)) throw ConfigError("logspace endpoints must be positive");
  std::vector<double> e = linspace(std::log10(a), std::log10(b), n);
  for (double& x : e) x = std::pow(10.0, x);
  if (n > 0) {
    e.front() = a;
    e.back() = b;
  }
  return e;
}

}  // namespace cohimpact
