#pragma once

#include <random>

#include "cohimpact/lindblad.hpp"
#include "cohimpact/qops.hpp"

namespace testutil {

using namespace cohimpact;

// Random GKSL model: Hermitian H of unit scale plus `jumps` random operators.
inline LindbladModel random_model(Index d, std::uint64_t seed, int jumps = 2, double rate = 0.5) {
  std::mt19937_64 rng(seed);
  LindbladModel m;
  m.hamiltonian = random_hermitian(d, rng);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int k = 0; k < jumps; ++k) {
    Matrix l(d, d);
    for (Index i = 0; i < d; ++i)
      for (Index j = 0; j < d; ++j) l(i, j) = cplx(g(rng), g(rng)) * std::sqrt(rate / double(d));
    m.jumps.push_back(l);
  }
  for (Index i = 0; i < d; ++i) m.labels.names.push_back("q" + std::to_string(i));
  m.labels.donor = {0};
  return m;
}

inline double expect(const Matrix& m, const Matrix& rho) { return (m * rho).trace().real(); }

}  // namespace testutil
