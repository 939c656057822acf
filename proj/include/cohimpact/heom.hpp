#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cohimpact/lindblad.hpp"

namespace cohimpact {

struct DrudeLorentzBath {
  double reorganization = 0.0;  // E_R, rad/ps
  double cutoff = 0.0;          // gamma_c, rad/ps
  double temperature = 0.0;     // k_B T, rad/ps
  int matsubara = 3;            // N_k

  void validate() const;
};

struct BathExponent {
  cplx amplitude;  // c_k
  double rate;     // nu_k
};

struct BathExpansion {
  std::vector<BathExponent> terms;
  // Weight of the dropped Matsubara tail, sum_{k>N_k} Re(c_k)/nu_k. It enters
  // the white-noise closure term.
  double residual = 0.0;
  std::vector<std::string> warnings;
};

// C(t) = sum_k c_k exp(-nu_k t), Drude pole plus N_k Matsubara terms. A
// warning is recorded when the dropped tail exceeds warn_fraction of the
// total zero-frequency weight 2 E_R k_B T / gamma_c.
BathExpansion bath_expansion(const DrudeLorentzBath& bath, double warn_fraction = 0.05);
cplx correlation_sum(const BathExpansion& e, double t);

enum class Terminator { none, markovian_closure };

struct HeomModel {
  Matrix hamiltonian;
  std::vector<Matrix> couplings;  // one Hermitian operator per bath
  std::vector<DrudeLorentzBath> baths;
  int depth = 5;
  Terminator terminator = Terminator::markovian_closure;
  std::vector<Matrix> jumps;  // Markovian channels acting on every ADO
  SiteBasisLabels labels;

  Index dim() const { return hamiltonian.rows(); }
  void validate() const;
  LindbladModel markov_part() const;
};

// Multi-indices n with |n| <= depth, ordered by tier; slot 0 is all zeros.
class Hierarchy {
 public:
  Hierarchy(int modes, int depth);

  std::size_t size() const { return count_; }
  int modes() const { return modes_; }
  int depth() const { return depth_; }
  std::span<const int> index(std::size_t slot) const {
    return {indices_.data() + slot * static_cast<std::size_t>(modes_), static_cast<std::size_t>(modes_)};
  }
  // -1 when the neighbour is outside the truncated hierarchy.
  long raise(std::size_t slot, int k) const { return up_[slot * static_cast<std::size_t>(modes_) + static_cast<std::size_t>(k)]; }
  long lower(std::size_t slot, int k) const { return down_[slot * static_cast<std::size_t>(modes_) + static_cast<std::size_t>(k)]; }

  static std::size_t count(int modes, int depth);

 private:
  int modes_;
  int depth_;
  std::size_t count_;
  std::vector<int> indices_;
  std::vector<long> up_, down_;
};

inline constexpr std::size_t kHeomScalarBudget = std::size_t{1} << 26;

class HeomGenerator {
 public:
  explicit HeomGenerator(const HeomModel& model);
  // Generator on the block spanned by idx (see check_block_invariance).
  static HeomGenerator restricted(const HeomModel& model, std::span<const Index> idx);

  Index system_dim() const { return d_; }
  std::size_t ado_count() const { return hier_.size(); }
  Index size() const { return static_cast<Index>(hier_.size()) * d_ * d_; }
  const Hierarchy& hierarchy() const { return hier_; }

  // out = L_HEOM(in). apply() splits ADOs across OpenMP threads; every ADO is
  // written by exactly one thread, so results do not depend on the split.
  void apply(const cplx* in, cplx* out) const;
  void apply_serial(const cplx* in, cplx* out) const;
  SparseMatrix assemble() const;

 private:
  struct Mode {
    int bath;
    cplx c;
    double nu;
    double up_scale;    // sqrt(|c|)
    double down_scale;  // 1/sqrt(|c|)
  };
  HeomGenerator(const HeomModel& model, const MarkovGenerator& sys, std::vector<Matrix> couplings,
                Index d);
  void apply_range(const cplx* in, cplx* out, std::size_t begin, std::size_t end) const;

  Index d_;
  MarkovGenerator sys_;
  std::vector<Matrix> v_;           // per bath
  std::vector<double> residual_;    // closure weight per bath
  std::vector<Mode> modes_;
  Hierarchy hier_;
  bool diagonal_;
  // Diagonal coupling fast path, entry (i, j) stored column-major.
  std::vector<Eigen::VectorXcd> comm_;   // per bath: v_i - v_j
  std::vector<Eigen::VectorXcd> down_;   // per mode: c v_i - conj(c) v_j
  Eigen::VectorXcd closure_;             // sum_b residual_b (v_i - v_j)^2
};

struct HeomOptions {
  OdeOptions ode{};
  bool parallel = true;
};

// Slot-0 trajectory from a factorized initial condition. Runs on the smallest
// forward-invariant block containing the support of rho0.
std::vector<Matrix> propagate_heom(const HeomModel& model, const Matrix& rho0,
                                   std::span<const double> times, const HeomOptions& opt = {},
                                   OdeStats* stats = nullptr);

using StatePropagator =
    std::function<std::vector<Matrix>(const Matrix& rho0, std::span<const double> times)>;

// M_t on the support block from d_S^2 probe trajectories. Entries outside the
// support block are not reconstructed and stay zero.
HeisenbergSeries reconstruct_observable(const StatePropagator& propagate, const Matrix& m,
                                        std::span<const double> times,
                                        std::span<const Index> support);
HeisenbergSeries reconstruct_observable(const HeomModel& model, const Matrix& m,
                                        std::span<const double> times,
                                        std::span<const Index> support, const HeomOptions& opt = {});

// Effective operator (-L^dagger)^{-order}(mtilde) computed in the extended
// space on the block spanned by support.
Matrix heom_resolvent_effect(const HeomModel& model, const Matrix& mtilde, int order,
                             std::span<const Index> support);

}  // namespace cohimpact
