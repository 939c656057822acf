#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "cohimpact/lindblad.hpp"

namespace cohimpact::chain {

// Basis (g, s, 1..N); site n (1-based) sits in slot n + 1.
inline constexpr Index G = 0, S = 1;
inline Index slot(int site) { return static_cast<Index>(site) + 1; }

// Internal units (rad/ps, ps^-1).
struct ChainParams {
  int n = 2;
  std::vector<double> energies;   // N entries
  std::vector<double> couplings;  // N-1 entries
  double recombination = 0.0;     // Gamma
  double trap = 0.0;              // kappa, from site N
  double dephasing = 0.0;         // gamma_phi

  static ChainParams homogeneous(int n, double coupling, double recombination, double trap,
                                 double dephasing);
  void validate() const;
};

SiteBasisLabels labels(int n);
std::vector<Index> donor_indices(int n);
LindbladModel build_chain(const ChainParams& p);

// 2 pi k_B T E_R / omega_c, all in rad/ps.
double gamma_phi_ohmic(double reorganization, double kt, double omega_c);

// M_trap(t) = Lambda_t^dagger(|s><s|) - |s><s|, full d x d.
std::vector<Matrix> trap_effect_series(const LindbladModel& model, std::span<const double> times,
                                       const PropagationOptions& opt = {});
Matrix trap_effect(const LindbladModel& model, double t);
// t -> infinity through the donor-block resolvent of kappa |N><N|.
Matrix trap_effect_infinite(const ChainParams& p);

struct TrapReport {
  double t = 0.0;
  Matrix m;  // donor block
  Matrix d;  // diagonal part
  Matrix b;  // off-diagonal part
  double eta_max = 0.0;
  double eta_incoh = 0.0;
  double c = 0.0;  // ||B||_inf
  Vector witness;           // top eigenvector of m, phase fixed
  Index witness_site = 0;   // 0-based donor index of max D_nn
};
TrapReport analyze(const Matrix& donor_block, double t);
TrapReport analyze_full(const Matrix& m_full, int n, double t);

struct Check {
  bool applicable = true;
  bool pass = true;
  double margin = 0.0;  // >= -tol means pass
};

inline constexpr double kBoundTol = 1e-9;

Check theorem1_check(const TrapReport& r);

// Advantage function f(Delta, b) = sqrt(b^2 + Delta^2/4) - Delta/2.
double advantage(double delta, double b);
double advantage_near_degenerate(double delta, double b);  // b - D/2 + D^2/8b - D^4/128b^3
double advantage_well_separated(double delta, double b);   // b^2/D - b^4/D^3

struct Corollary2 {
  double lambda_plus = 0.0;
  double delta = 0.0;  // |D_nn - D_mm|
  double b = 0.0;      // |B_nm|
  double f = 0.0;
  Check lower_bound;   // eta_max >= lambda_plus
  Check advantage;     // eta_max - eta_incoh >= f when n attains eta_incoh
  Check near_degenerate;  // 0 <= f - f_nd <= Delta^6/(1024 b^5), Delta <= 2b
  Check well_separated;   // 0 <= f - f_ws <= 2 b^6/Delta^5, Delta >= 2b
  bool pass() const;
};
Corollary2 corollary2_bounds(const TrapReport& r, Index n, Index m);

struct Theorem3 {
  double delta = 0.0;
  double c_max = 0.0;
  double l1 = 0.0;
  Index support = 0;
  double c_rel = 0.0;
  Check l1_bound;       // C_l1 >= delta / c_max
  Check l1_bound_c;     // C_l1 >= delta / C
  Check support_bound;  // m >= 1 + delta / c_max
  Check entropy_bound;  // C_rel >= (delta / C)^2 / (2 ln 2)
  bool pass() const;
};
Theorem3 theorem3_check(const TrapReport& r, const Vector& psi);
// Mixed input: only the entropic condition applies.
Check theorem3_entropy_check(const TrapReport& r, const Matrix& rho);

struct Corollary4 {
  double delta = 0.0;
  double ipr = 0.0;
  double bound_f = 0.0;  // 1 - delta^2 / ||B||_F^2
  double bound_n = 0.0;  // 1 - delta^2 / (N C^2)
  Check frobenius;
  Check uniform;
  bool pass() const { return frobenius.pass && uniform.pass; }
};
Corollary4 corollary4_check(const TrapReport& r, const Vector& psi);

struct Theorem5 {
  Index k = 0;
  double gap = 0.0;
  double deficit = 0.0;
  double bound = 0.0;
  Check check;
};
Theorem5 theorem5_check(const TrapReport& r);

struct Optimizer {
  Vector psi;
  double eigenvalue = 0.0;
  double l1_ratio = 0.0;
  double ipr = 0.0;
  std::vector<double> populations;
  Index degeneracy = 1;
};
struct OptimizerReport {
  Optimizer eta;    // top eigenvector of M_trap
  Optimizer sensitivity;  // extremal eigenvector of B
};
OptimizerReport optimizer_analysis(const Matrix& donor_block);

// Random instances for the theorem corpus.
struct Instance {
  ChainParams params;
  double t = 0.0;  // +inf selects the resolvent limit
};
Instance random_instance(std::mt19937_64& rng, int n_min = 2, int n_max = 12);

struct CorpusSummary {
  std::size_t instances = 0;
  std::size_t violations = 0;
  double min_thm1 = 1e300, min_cor2 = 1e300, min_thm3 = 1e300, min_cor4 = 1e300, min_thm5 = 1e300;
  std::size_t thm5_applicable = 0;
  double max_sink_identity = 0.0;  // against the quadrature oracle
  std::size_t falsification_states = 0;
  std::size_t counterexamples = 0;
};
// Runs every check on `instances` random chains. The first `falsify` of them
// also get `samples` random pure donor states each.
CorpusSummary run_corpus(std::size_t instances, std::uint64_t seed, std::size_t falsify = 0,
                         std::size_t samples = 0);

}  // namespace cohimpact::chain
