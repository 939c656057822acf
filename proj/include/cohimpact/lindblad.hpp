#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "cohimpact/ode.hpp"
#include "cohimpact/qops.hpp"

namespace cohimpact {

using SparseMatrix = Eigen::SparseMatrix<cplx>;

struct LindbladModel {
  Matrix hamiltonian;          // rad/ps
  std::vector<Matrix> jumps;   // sqrt(rate) absorbed
  SiteBasisLabels labels;

  Index dim() const { return hamiltonian.rows(); }
  void validate() const;
};

// Applies L and its adjoint without forming the d^2 x d^2 matrix. Single-entry
// jumps a|i><j| are special-cased since every transport model here uses them.
class MarkovGenerator {
 public:
  explicit MarkovGenerator(const LindbladModel& model);
  // Generator on operators supported on the P-block spanned by idx. Requires
  // the block to be invariant (see check_block_invariance).
  static MarkovGenerator restricted(const LindbladModel& model, std::span<const Index> idx);

  Index dim() const { return heff_.rows(); }
  const Matrix& heff() const { return heff_; }
  const Matrix& loss() const { return loss_; }

  void apply(const Matrix& rho, Matrix& out) const;
  void apply_adjoint(const Matrix& m, Matrix& out) const;

  Matrix superoperator() const;
  SparseMatrix sparse_superoperator(bool adjoint) const;

 private:
  struct Jump {
    Matrix op;
    bool single = false;
    Index i = 0, j = 0;
    double weight = 0.0;  // |a|^2 for single-entry jumps
  };
  MarkovGenerator() = default;
  void add_jump(const Matrix& op);

  Matrix heff_;  // H - (i/2) K
  Matrix loss_;  // K = sum J^dagger J
  std::vector<Jump> jumps_;
};

// Throws PreconditionError unless QHP = 0, QKP = 0 and P J Q = 0.
void check_block_invariance(const LindbladModel& model, std::span<const Index> idx);

Matrix build_generator(const LindbladModel& model);
Matrix adjoint_generator(const LindbladModel& model);

enum class PropagationMethod { automatic, exponential, integrator };

struct PropagationOptions {
  PropagationMethod method = PropagationMethod::automatic;
  OdeOptions ode{};
};

struct PropagationReport {
  std::string method;
  double max_trace_error = 0.0;
  double min_eigenvalue = 0.0;
  bool positivity_violation = false;  // some eigenvalue below -1e-7
  OdeStats ode{};
};

inline constexpr Index kExponentialMaxDim2 = 144;

std::vector<Matrix> propagate_state(const LindbladModel& model, const Matrix& rho0,
                                    std::span<const double> times,
                                    const PropagationOptions& opt = {},
                                    PropagationReport* report = nullptr);

struct HeisenbergSeries {
  std::vector<double> times;
  std::vector<Matrix> matrices;
  std::string provenance;
};

HeisenbergSeries heisenberg_evolve(const LindbladModel& model, const Matrix& m,
                                   std::span<const double> times,
                                   const PropagationOptions& opt = {});

// Propagates a generic flow (forward or adjoint) of a MarkovGenerator.
std::vector<Matrix> evolve_generator(const MarkovGenerator& gen, bool adjoint, const Matrix& x0,
                                     std::span<const double> times,
                                     const PropagationOptions& opt = {}, OdeStats* stats = nullptr);

// (-L^dagger)^{-order} applied to mtilde on the block spanned by support.
// Returns a d x d matrix that vanishes outside that block.
Matrix resolvent_effect(const LindbladModel& model, const Matrix& mtilde, int order,
                        std::span<const Index> support);

// Largest real part of the spectrum of the block generator (dense
// eigensolve; intended for small blocks).
double spectral_abscissa(const MarkovGenerator& gen);

// Time grids.
std::vector<double> linspace(double a, double b, std::size_t n);
std::vector<double> logspace(double a, double b, std::size_t n);

// Superoperator helpers, column stacking.
Vector vec(const Matrix& m);
Matrix unvec(const Vector& v, Index d);

}  // namespace cohimpact
