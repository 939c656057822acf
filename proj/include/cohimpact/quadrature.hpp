#pragma once

#include <functional>
#include <vector>

#include "cohimpact/qops.hpp"

namespace cohimpact {

struct GaussRule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};
GaussRule gauss_legendre(int n);

struct FlowQuadratureOptions {
  int order = 10;
  double rel_tol = 1e-12;
  double abs_tol = 1e-14;
  int max_depth = 12;
};

// Integral over [0, T] of w(tau) exp(tau A) v for a dense generator A, by
// composite Gauss-Legendre on panels with h*|A|_1 <= 1 and recursive halving
// wherever a panel disagrees with its two halves.
Vector integrate_flow(const Matrix& a, const Vector& v, double t_end,
                      const std::function<double(double)>& w,
                      const FlowQuadratureOptions& opt = {});

}  // namespace cohimpact

#include <span>

#include "cohimpact/lindblad.hpp"

namespace cohimpact {

// Integral over [0, T] of w(tau) Lambda_tau^dagger(m) on the block spanned by
// support (all of the space when support is empty).
Matrix integrate_heisenberg(const LindbladModel& model, const Matrix& m, double t_end,
                            const std::function<double(double)>& w,
                            std::span<const Index> support = {},
                            const FlowQuadratureOptions& opt = {});

}  // namespace cohimpact
