#include "cohimpact/qops.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>
#include <sstream>

#include <omp.h>

#include "cohimpact/errors.hpp"
#include "cohimpact/parallel.hpp"

namespace cohimpact {

HermitianObservable::HermitianObservable(Matrix m, Validate v) : m_(std::move(m)) {
  if (v == Validate::no) return;
  require_square(m_, "observable");
  if (!is_hermitian(m_)) throw StateError("observable is not Hermitian");
}

DensityState::DensityState(Matrix m, Validate v) : m_(std::move(m)) {
  if (v == Validate::no) return;
  require_square(m_, "density state");
  if (m_.rows() == 0) throw DimensionError("density state must have dim >= 1");
  if (!is_hermitian(m_)) throw StateError("density state is not Hermitian");
  const cplx tr = m_.trace();
  if (std::abs(tr - 1.0) > kTraceTol) {
    std::ostringstream os;
    os << "density state trace " << tr.real() << " differs from 1";
    throw StateError(os.str());
  }
  const double lmin = hermitian_eigenvalues(m_).minCoeff();
  if (lmin < -kPositivityTol) {
    std::ostringstream os;
    os << "density state has negative eigenvalue " << lmin;
    throw StateError(os.str());
  }
}

Index SiteBasisLabels::index_of(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw ConfigError("unknown basis label '" + name + "'");
  return static_cast<Index>(it - names.begin());
}

void SiteBasisLabels::validate(bool transport) const {
  std::set<std::string> seen(names.begin(), names.end());
  if (seen.size() != names.size()) throw ConfigError("basis labels are not unique");
  if (transport && donor.empty()) throw ConfigError("donor manifold is empty");
  for (Index i : donor)
    if (i < 0 || i >= dim()) throw ConfigError("donor slot out of range");
}

void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols()) {
    std::ostringstream os;
    os << what << " is " << m.rows() << "x" << m.cols() << ", expected square";
    throw DimensionError(os.str());
  }
}

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

bool is_hermitian(const Matrix& m, double rel_tol) {
  if (m.rows() != m.cols()) return false;
  const double scale = max_abs(m);
  return max_abs(m - m.adjoint()) <= rel_tol * scale;
}

Matrix hermitian_part(const Matrix& m) { return 0.5 * (m + m.adjoint()); }

HermitianEigen hermitian_eigen(const Matrix& m) {
  require_square(m, "eigensolver input");
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  if (es.info() != Eigen::Success) {
    std::ostringstream os;
    os << "Hermitian eigensolver failed to converge (dim " << m.rows() << ", max|m| " << max_abs(m)
       << ")";
    throw NumericalError(os.str());
  }
  return {es.eigenvalues(), es.eigenvectors()};
}

Eigen::VectorXd hermitian_eigenvalues(const Matrix& m) {
  require_square(m, "eigensolver input");
  if (m.rows() == 0) return {};
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    std::ostringstream os;
    os << "Hermitian eigensolver failed to converge (dim " << m.rows() << ")";
    throw NumericalError(os.str());
  }
  return es.eigenvalues();
}

Matrix dephase(const Matrix& m) {
  require_square(m, "dephase input");
  Matrix out = Matrix::Zero(m.rows(), m.cols());
  out.diagonal() = m.diagonal();
  return out;
}

HermitianObservable dephase(const HermitianObservable& m) {
  return HermitianObservable(dephase(m.matrix()), Validate::no);
}

DensityState dephase(const DensityState& rho) {
  return DensityState(dephase(rho.matrix()), Validate::no);
}

Matrix offdiag_part(const Matrix& m) {
  require_square(m, "offdiag input");
  Matrix out = m;
  out.diagonal().setZero();
  return out;
}

HermitianObservable offdiag_part(const HermitianObservable& m) {
  return HermitianObservable(offdiag_part(m.matrix()), Validate::no);
}

double operator_norm(const Matrix& hermitian) {
  if (hermitian.rows() == 0) return 0.0;
  const Eigen::VectorXd ev = hermitian_eigenvalues(hermitian);
  return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

double operator_norm(const HermitianObservable& m) { return operator_norm(m.matrix()); }

double frobenius_norm(const Matrix& m) { return m.norm(); }

double trace_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues().sum();
}

Vector pure_amplitudes(const Matrix& rho) {
  const HermitianEigen es = hermitian_eigen(rho);
  const Index d = rho.rows();
  if (d > 1 && es.values(d - 2) > kPurityTol) {
    std::ostringstream os;
    os << "state is not pure (second eigenvalue " << es.values(d - 2) << ")";
    throw PurityError(os.str());
  }
  Vector psi = es.vectors.col(d - 1);
  fix_phase(psi);
  return psi;
}

double l1_coherence(const Vector& psi) {
  const double s = psi.cwiseAbs().sum();
  return std::max(0.0, s * s - psi.squaredNorm());
}

double l1_coherence(const DensityState& rho) { return l1_coherence(pure_amplitudes(rho.matrix())); }

double ipr(const Vector& psi) { return psi.cwiseAbs2().cwiseAbs2().sum(); }
double ipr(const DensityState& rho) { return ipr(pure_amplitudes(rho.matrix())); }
double pr(const Vector& psi) { return 1.0 / ipr(psi); }
double pr(const DensityState& rho) { return 1.0 / ipr(rho); }

double von_neumann_entropy_bits(const Matrix& rho) {
  const Eigen::VectorXd ev = hermitian_eigenvalues(rho);
  double s = 0.0;
  for (double p : ev) {
    if (p < -kPositivityTol) {
      std::ostringstream os;
      os << "negative eigenvalue " << p << " in entropy argument";
      throw StateError(os.str());
    }
    if (p > kEntropyClamp) s -= p * std::log2(p);
  }
  return s;
}

double relative_entropy_coherence(const Matrix& rho) {
  return std::max(0.0, von_neumann_entropy_bits(dephase(rho)) - von_neumann_entropy_bits(rho));
}

double relative_entropy_coherence(const DensityState& rho) {
  return relative_entropy_coherence(rho.matrix());
}

void fix_phase(Vector& v) {
  if (v.size() == 0) return;
  Index k = 0;
  double best = -1.0;
  for (Index i = 0; i < v.size(); ++i) {
    // Ties are resolved to the lowest index, up to roundoff.
    if (std::abs(v(i)) > best + 1e-12) {
      best = std::abs(v(i));
      k = i;
    }
  }
  if (best <= 0.0) return;
  v *= std::conj(v(k)) / best;
  v(k) = cplx(std::abs(v(k)), 0.0);
}

Vector random_pure_vector(Index dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vector psi(dim);
  for (Index i = 0; i < dim; ++i) {
    const double re = g(rng);
    const double im = g(rng);
    psi(i) = cplx(re, im);
  }
  return psi / psi.norm();
}

Matrix random_hermitian(Index dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix a(dim, dim);
  for (Index j = 0; j < dim; ++j)
    for (Index i = 0; i < dim; ++i) {
      const double re = g(rng);
      const double im = g(rng);
      a(i, j) = cplx(re, im);
    }
  return hermitian_part(a);
}

DensityState random_pure_state(Index dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return DensityState(pure_density(random_pure_vector(dim, rng)), Validate::no);
}

DensityState random_density(Index dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix a(dim, dim);
  for (Index j = 0; j < dim; ++j)
    for (Index i = 0; i < dim; ++i) {
      const double re = g(rng);
      const double im = g(rng);
      a(i, j) = cplx(re, im);
    }
  Matrix rho = a * a.adjoint();
  rho /= rho.trace().real();
  return DensityState(hermitian_part(rho), Validate::no);
}

Matrix ket_bra(Index dim, Index i, Index j) {
  Matrix m = Matrix::Zero(dim, dim);
  m(i, j) = 1.0;
  return m;
}

Matrix projector(Index dim, Index i) { return ket_bra(dim, i, i); }

Matrix pure_density(const Vector& psi) { return psi * psi.adjoint(); }

Matrix extract_block(const Matrix& m, std::span<const Index> idx) {
  const Index s = static_cast<Index>(idx.size());
  Matrix b(s, s);
  for (Index j = 0; j < s; ++j)
    for (Index i = 0; i < s; ++i) b(i, j) = m(idx[i], idx[j]);
  return b;
}

Matrix embed_block(const Matrix& block, std::span<const Index> idx, Index dim) {
  Matrix m = Matrix::Zero(dim, dim);
  const Index s = static_cast<Index>(idx.size());
  for (Index j = 0; j < s; ++j)
    for (Index i = 0; i < s; ++i) m(idx[i], idx[j]) = block(i, j);
  return m;
}

int worker_count() {
  if (const char* env = std::getenv("COHIMPACT_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return omp_get_max_threads();
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace cohimpact
