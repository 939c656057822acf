#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cohimpact {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using Index = Eigen::Index;

inline constexpr double kHermitianTol = 1e-12;
inline constexpr double kPositivityTol = 1e-10;
inline constexpr double kTraceTol = 1e-10;
inline constexpr double kPurityTol = 1e-8;
inline constexpr double kEntropyClamp = 1e-14;

enum class Validate { yes, no };

class HermitianObservable {
 public:
  HermitianObservable() = default;
  explicit HermitianObservable(Matrix m, Validate v = Validate::yes);
  const Matrix& matrix() const { return m_; }
  Index dim() const { return m_.rows(); }

 private:
  Matrix m_;
};

class DensityState {
 public:
  DensityState() = default;
  explicit DensityState(Matrix m, Validate v = Validate::yes);
  const Matrix& matrix() const { return m_; }
  Index dim() const { return m_.rows(); }

 private:
  Matrix m_;
};

struct SiteBasisLabels {
  std::vector<std::string> names;
  std::vector<Index> donor;  // slots of the donor manifold, ascending

  Index dim() const { return static_cast<Index>(names.size()); }
  Index index_of(const std::string& name) const;
  void validate(bool transport) const;
};

void require_square(const Matrix& m, const char* what);
double max_abs(const Matrix& m);
bool is_hermitian(const Matrix& m, double rel_tol = kHermitianTol);
Matrix hermitian_part(const Matrix& m);

struct HermitianEigen {
  Eigen::VectorXd values;  // ascending
  Matrix vectors;
};
HermitianEigen hermitian_eigen(const Matrix& m);
Eigen::VectorXd hermitian_eigenvalues(const Matrix& m);

Matrix dephase(const Matrix& m);
HermitianObservable dephase(const HermitianObservable& m);
DensityState dephase(const DensityState& rho);

Matrix offdiag_part(const Matrix& m);
HermitianObservable offdiag_part(const HermitianObservable& m);

double operator_norm(const Matrix& hermitian);
double operator_norm(const HermitianObservable& m);
double frobenius_norm(const Matrix& m);
double trace_norm(const Matrix& m);

// Amplitude vector of a rank-one state; throws PurityError otherwise.
Vector pure_amplitudes(const Matrix& rho);

double l1_coherence(const Vector& psi);
double l1_coherence(const DensityState& rho);
double ipr(const Vector& psi);
double ipr(const DensityState& rho);
double pr(const Vector& psi);
double pr(const DensityState& rho);

double von_neumann_entropy_bits(const Matrix& rho);
double relative_entropy_coherence(const Matrix& rho);
double relative_entropy_coherence(const DensityState& rho);

// Largest-magnitude component made real and positive.
void fix_phase(Vector& v);

Vector random_pure_vector(Index dim, std::mt19937_64& rng);
Matrix random_hermitian(Index dim, std::mt19937_64& rng);
DensityState random_pure_state(Index dim, std::uint64_t seed);
DensityState random_density(Index dim, std::uint64_t seed);

Matrix ket_bra(Index dim, Index i, Index j);
Matrix projector(Index dim, Index i);
Matrix pure_density(const Vector& psi);

Matrix extract_block(const Matrix& m, std::span<const Index> idx);
Matrix embed_block(const Matrix& block, std::span<const Index> idx, Index dim);

}  // namespace cohimpact
