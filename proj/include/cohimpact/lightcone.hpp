#pragma once

#include <limits>
#include <span>
#include <vector>

#include "cohimpact/chain.hpp"
#include "cohimpact/lindblad.hpp"

namespace cohimpact::lightcone {

inline constexpr double kNoiseFloor = 1e-12;

// Undirected graph on the basis slots with all-pairs BFS distances.
class Geometry {
 public:
  Geometry(Index vertices, const std::vector<std::pair<Index, Index>>& edges);
  // Edges wherever |H_ij| > tol or some jump has a nonzero (i, j) entry.
  static Geometry from_model(const LindbladModel& model, double tol = 1e-12);
  // (g, s, 1..N) chain: nearest-neighbour edges plus N -- s.
  static Geometry chain(int n);

  Index size() const { return static_cast<Index>(dist_.size()); }
  // Unreachable pairs are -1.
  int distance(Index a, Index b) const { return dist_[a][b]; }
  int distance(std::span<const Index> a, std::span<const Index> b) const;

 private:
  std::vector<std::vector<int>> dist_;
};

struct Profile {
  std::vector<double> times;
  std::vector<std::vector<Index>> sets;
  std::vector<std::vector<double>> values;  // values[set][time]
};

// ||P_S (id - G)(Lambda_t^dagger(M)) P_S||_inf for each S, from one Heisenberg
// propagation. M must be supported on X and every S disjoint from X.
Profile restricted_profile(const LindbladModel& model, const Matrix& m, std::span<const Index> x,
                           const std::vector<std::vector<Index>>& sets,
                           std::span<const double> times, const PropagationOptions& opt = {});

struct EnvelopeSample {
  double distance = 0.0;
  double t = 0.0;
  double value = 0.0;
};

// C <= C_LC |M| exp(v_QL t - mu d), with C_LC = 2 C_QL e^mu.
struct LightConeFit {
  double c_lc = 0.0;
  double c_ql = 0.0;
  double v_ql = 0.0;
  double mu = 0.0;
  double v_lc = 0.0;
  double r2 = 0.0;             // of the unconstrained least-squares fit
  double offset_shift = 0.0;   // log-offset added for domination
  double rms_residual = 0.0;
  double inside_fraction = 0.0;
  std::size_t points = 0;
  double envelope(double d, double t, double norm_m) const;
};

LightConeFit fit_envelope(std::span<const EnvelopeSample> samples, double norm_m);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};
LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

// First crossing of `threshold`, linearly interpolated; NaN if never reached.
double arrival_time(std::span<const double> times, std::span<const double> values,
                    double threshold);

struct Corollary7Row {
  double t = 0.0;
  double value = 0.0;
  double envelope = 0.0;
  double margin = 0.0;
};
struct Corollary7 {
  int d_s = 0;  // distance from S to site N
  std::vector<Corollary7Row> rows;
  bool pass = true;
};
// Chain form: d(S, {s}) = d_S + 1, checked against the fitted constants.
Corollary7 corollary7_check(const chain::ChainParams& p, std::span<const Index> s,
                            std::span<const double> times, const LightConeFit& fit);

struct MemoryTime {
  double tau = 0.0;
  double initial = 0.0;
  bool incoherent = false;   // initial value below the noise floor
  bool never = false;        // did not decay inside the window; tau = +inf
};
MemoryTime memory_time(const LindbladModel& model, std::span<const Index> s, const Matrix& rho0,
                       std::span<const double> times, double fraction = 0.36787944117144233);

int truncation_radius(const LightConeFit& fit, double t, double eps, double norm_m);

// Keeps the sites within graph distance r of the sink and compares the
// restricted sink profile on S with the full chain.
struct TruncationReport {
  int radius = 0;
  int kept_sites = 0;
  double max_deviation = 0.0;
  double eps = 0.0;
  bool pass = false;  // max_deviation <= 3 eps
};
TruncationReport truncation_experiment(const chain::ChainParams& p, std::span<const Index> s,
                                       std::span<const double> times, int radius, double eps,
                                       const PropagationOptions& opt = {});

}  // namespace cohimpact::lightcone
