#include "cohimpact/quadrature.hpp"

#include <cmath>
#include <map>

#include <unsupported/Eigen/MatrixFunctions>

#include "cohimpact/errors.hpp"

namespace cohimpact {

GaussRule gauss_legendre(int n) {
  GaussRule r;
  r.nodes.resize(static_cast<std::size_t>(n));
  r.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    r.nodes[static_cast<std::size_t>(i)] = x;
    r.weights[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return r;
}

namespace {

class FlowIntegrator {
 public:
  FlowIntegrator(const Matrix& a, const std::function<double(double)>& w,
                 const FlowQuadratureOptions& opt)
      : a_(a), w_(w), opt_(opt), rule_(gauss_legendre(opt.order)) {}

  Vector panel(double t0, const Vector& u, double h, int depth) {
    const Vector whole = rule_sum(t0, u, h);
    const Vector left = rule_sum(t0, u, 0.5 * h);
    const Vector mid = propagator(0.5 * h) * u;
    const Vector right = rule_sum(t0 + 0.5 * h, mid, 0.5 * h);
    const Vector halves = left + right;
    const double err = (halves - whole).norm();
    if (err <= opt_.rel_tol * halves.norm() + opt_.abs_tol * h) return halves;
    if (depth >= opt_.max_depth) throw NumericalError("flow quadrature failed to converge");
    return panel(t0, u, 0.5 * h, depth + 1) + panel(t0 + 0.5 * h, mid, 0.5 * h, depth + 1);
  }

  const Matrix& propagator(double h) {
    auto it = exp_.find(h);
    if (it == exp_.end()) it = exp_.emplace(h, Matrix((h * a_).exp())).first;
    return it->second;
  }

 private:
  Vector rule_sum(double t0, const Vector& u, double h) {
    auto it = nodes_.find(h);
    if (it == nodes_.end()) {
      std::vector<Matrix> e;
      for (double x : rule_.nodes) e.emplace_back((0.5 * h * (1.0 + x) * a_).exp());
      it = nodes_.emplace(h, std::move(e)).first;
    }
    Vector acc = Vector::Zero(u.size());
    for (std::size_t i = 0; i < rule_.nodes.size(); ++i) {
      const double tau = 0.5 * h * (1.0 + rule_.nodes[i]);
      const double wt = w_(t0 + tau);
      if (wt != 0.0) acc.noalias() += (0.5 * h * rule_.weights[i] * wt) * (it->second[i] * u);
    }
    return acc;
  }

  const Matrix& a_;
  const std::function<double(double)>& w_;
  FlowQuadratureOptions opt_;
  GaussRule rule_;
  std::map<double, Matrix> exp_;
  std::map<double, std::vector<Matrix>> nodes_;
};

}  // namespace

Vector integrate_flow(const Matrix& a, const Vector& v, double t_end,
                      const std::function<double(double)>& w, const FlowQuadratureOptions& opt) {
  if (a.rows() != a.cols() || a.rows() != v.size()) throw DimensionError("flow quadrature shape");
  if (t_end < 0.0) throw PreconditionError("negative integration length");
  if (t_end == 0.0) return Vector::Zero(v.size());
  const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
  const long panels = std::max(1L, static_cast<long>(std::ceil(t_end * norm1)));
  const double h = t_end / static_cast<double>(panels);
  FlowIntegrator fi(a, w, opt);
  Vector acc = Vector::Zero(v.size());
  Vector u = v;
  for (long k = 0; k < panels; ++k) {
    acc += fi.panel(static_cast<double>(k) * h, u, h, 0);
    u = fi.propagator(h) * u;
  }
  return acc;
}

}  // namespace cohimpact

namespace cohimpact {

Matrix integrate_heisenberg(const LindbladModel& model, const Matrix& m, double t_end,
                            const std::function<double(double)>& w,
                            std::span<const Index> support, const FlowQuadratureOptions& opt) {
  const Index d = model.dim();
  std::vector<Index> all;
  if (support.empty()) {
    for (Index i = 0; i < d; ++i) all.push_back(i);
    support = all;
  }
  const MarkovGenerator gen = static_cast<Index>(support.size()) == d
                                  ? MarkovGenerator(model)
                                  : MarkovGenerator::restricted(model, support);
  const Matrix a = gen.superoperator().adjoint();
  const Index s = gen.dim();
  const Vector v = vec(extract_block(m, support));
  const Vector r = integrate_flow(a, v, t_end, w, opt);
  return embed_block(hermitian_part(unvec(r, s)), support, d);
}

}  // namespace cohimpact
