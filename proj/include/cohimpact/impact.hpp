#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "cohimpact/lindblad.hpp"

namespace cohimpact {

struct ImpactPoint {
  double t;
  double value;
};

// C_M = || (id - G)(M_t) ||_inf.
double impact_of(const Matrix& mt);
std::vector<ImpactPoint> impact_from_series(const HeisenbergSeries& series);

// Sampling lower estimate over Haar pure states. Samples are split into fixed
// chunks of kSampleChunk with seeds chunk_seed(seed, c), so the result does
// not depend on the thread count.
inline constexpr std::size_t kSampleChunk = 4096;
double brute_force_impact(const Matrix& mt, std::size_t samples, std::uint64_t seed);
double brute_force_impact_serial(const Matrix& mt, std::size_t samples, std::uint64_t seed);

// A parametrized set of states: either an explicit list (evaluated
// exhaustively) or a sampler.
struct StateFamily {
  std::vector<Matrix> members;
  std::function<Matrix(std::mt19937_64&)> sampler;

  static StateFamily finite(std::vector<Matrix> states);
  static StateFamily incoherent(Index dim);
  static StateFamily pure(Index dim);
};
double restricted_impact(const Matrix& mt, const StateFamily& family, std::size_t samples,
                         std::uint64_t seed);

double support_restricted_impact(const Matrix& mt, std::span<const Index> s);

struct UtilizationPoint {
  double t;
  double delta_y;
  double impact;
  std::optional<double> ratio;  // empty where impact < 1e-12
};
std::vector<UtilizationPoint> utilization(const HeisenbergSeries& series, const Matrix& rho0);
std::vector<UtilizationPoint> utilization(const LindbladModel& model, const Matrix& rho0,
                                          const Matrix& m, std::span<const double> times);

}  // namespace cohimpact
