#include "cohimpact/lightcone.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>
#include <sstream>

#include "cohimpact/errors.hpp"

namespace cohimpact::lightcone {

Geometry::Geometry(Index vertices, const std::vector<std::pair<Index, Index>>& edges) {
  const auto n = static_cast<std::size_t>(vertices);
  std::vector<std::vector<Index>> adj(n);
  for (auto [a, b] : edges) {
    if (a < 0 || b < 0 || a >= vertices || b >= vertices)
      throw DimensionError("edge endpoint outside the vertex set");
    if (a == b) continue;
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  dist_.assign(n, std::vector<int>(n, -1));
  for (std::size_t src = 0; src < n; ++src) {
    std::deque<Index> queue{static_cast<Index>(src)};
    dist_[src][src] = 0;
    while (!queue.empty()) {
      const Index v = queue.front();
      queue.pop_front();
      for (Index w : adj[v])
        if (dist_[src][w] < 0) {
          dist_[src][w] = dist_[src][v] + 1;
          queue.push_back(w);
        }
    }
  }
}

Geometry Geometry::from_model(const LindbladModel& model, double tol) {
  const Index d = model.dim();
  std::vector<std::pair<Index, Index>> edges;
  for (Index i = 0; i < d; ++i)
    for (Index j = i + 1; j < d; ++j) {
      bool linked = std::abs(model.hamiltonian(i, j)) > tol;
      for (const Matrix& l : model.jumps)
        linked = linked || std::abs(l(i, j)) > tol || std::abs(l(j, i)) > tol;
      if (linked) edges.emplace_back(i, j);
    }
  return Geometry(d, edges);
}

Geometry Geometry::chain(int n) {
  std::vector<std::pair<Index, Index>> edges;
  for (int k = 1; k < n; ++k) edges.emplace_back(chain::slot(k), chain::slot(k + 1));
  edges.emplace_back(chain::slot(n), chain::S);
  return Geometry(n + 2, edges);
}

int Geometry::distance(std::span<const Index> a, std::span<const Index> b) const {
  int best = -1;
  for (Index u : a)
    for (Index v : b) {
      const int d = dist_.at(u).at(v);
      if (d >= 0 && (best < 0 || d < best)) best = d;
    }
  return best;
}

namespace {

void require_disjoint(std::span<const Index> s, std::span<const Index> x) {
  for (Index a : s)
    for (Index b : x)
      if (a == b) throw PreconditionError("restricted set S must be disjoint from the support X");
}

}  // namespace

Profile restricted_profile(const LindbladModel& model, const Matrix& m, std::span<const Index> x,
                           const std::vector<std::vector<Index>>& sets,
                           std::span<const double> times, const PropagationOptions& opt) {
  const Index d = model.dim();
  if (m.rows() != d || m.cols() != d) throw DimensionError("observable and model dimensions differ");
  if (x.empty()) throw PreconditionError("support X is empty");
  if (max_abs(m - embed_block(extract_block(m, x), x, d)) > 1e-12)
    throw PreconditionError("observable is not supported on X");
  for (const auto& s : sets) {
    if (s.empty()) throw PreconditionError("restricted set S is empty");
    for (Index i : s)
      if (i < 0 || i >= d) throw DimensionError("restricted set index out of range");
    require_disjoint(s, x);
  }
  const HeisenbergSeries hs = heisenberg_evolve(model, m, times, opt);
  Profile p;
  p.times.assign(times.begin(), times.end());
  p.sets = sets;
  p.values.assign(sets.size(), std::vector<double>(times.size(), 0.0));
  for (std::size_t k = 0; k < hs.matrices.size(); ++k) {
    const Matrix off = offdiag_part(hs.matrices[k]);
    for (std::size_t s = 0; s < sets.size(); ++s)
      p.values[s][k] = operator_norm(extract_block(off, sets[s]));
  }
  return p;
}

double LightConeFit::envelope(double d, double t, double norm_m) const {
  return c_lc * norm_m * std::exp(v_ql * t - mu * d);
}

LightConeFit fit_envelope(std::span<const EnvelopeSample> samples, double norm_m) {
  if (!(norm_m > 0.0)) throw FitError("observable norm must be positive");
  std::vector<EnvelopeSample> kept;
  std::set<double> ds, ts;
  for (const auto& s : samples)
    if (s.value > kNoiseFloor) {
      kept.push_back(s);
      ds.insert(s.distance);
      ts.insert(s.t);
    }
  if (ds.size() < 3 || ts.size() < 5) {
    std::ostringstream os;
    os << "envelope fit needs >= 3 distances and >= 5 times above the noise floor, got "
       << ds.size() << " and " << ts.size();
    throw FitError(os.str());
  }
  const auto n = static_cast<Index>(kept.size());
  Eigen::MatrixXd a(n, 3);
  Eigen::VectorXd y(n);
  for (Index i = 0; i < n; ++i) {
    a(i, 0) = 1.0;
    a(i, 1) = kept[i].t;
    a(i, 2) = -kept[i].distance;
    y(i) = std::log(kept[i].value / norm_m);
  }
  const Eigen::VectorXd beta = a.colPivHouseholderQr().solve(y);
  const Eigen::VectorXd res = y - a * beta;
  const double ss_res = res.squaredNorm();
  const double ss_tot = (y.array() - y.mean()).square().sum();

  LightConeFit f;
  f.points = kept.size();
  f.v_ql = beta(1);
  f.mu = beta(2);
  f.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  f.rms_residual = std::sqrt(ss_res / static_cast<double>(n));
  if (!(f.mu > 0.0)) {
    std::ostringstream os;
    os << "fitted decay constant mu = " << f.mu << " is not positive";
    throw FitError(os.str());
  }
  f.offset_shift = std::max(0.0, res.maxCoeff());
  f.c_lc = std::exp(beta(0) + f.offset_shift);
  f.c_ql = f.c_lc / (2.0 * std::exp(f.mu));
  f.v_lc = f.v_ql / f.mu;
  std::size_t inside = 0;
  for (const auto& s : kept)
    if (s.value < f.envelope(s.distance, s.t, norm_m) * (1.0 - 1e-9)) ++inside;
  f.inside_fraction = static_cast<double>(inside) / static_cast<double>(kept.size());
  return f;
}

LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw FitError("linear fit needs >= 2 paired points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0) throw FitError("linear fit needs distinct abscissae");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  return f;
}

double arrival_time(std::span<const double> times, std::span<const double> values,
                    double threshold) {
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (values[k] < threshold) continue;
    if (k == 0) return times[0];
    const double f = (threshold - values[k - 1]) / (values[k] - values[k - 1]);
    return times[k - 1] + f * (times[k] - times[k - 1]);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

Corollary7 corollary7_check(const chain::ChainParams& p, std::span<const Index> s,
                            std::span<const double> times, const LightConeFit& fit) {
  const LindbladModel model = chain::build_chain(p);
  const Index sink[1] = {chain::S};
  const Profile prof = restricted_profile(model, projector(model.dim(), chain::S), sink,
                                          {std::vector<Index>(s.begin(), s.end())}, times);
  const Geometry g = Geometry::chain(p.n);
  const Index last[1] = {chain::slot(p.n)};
  Corollary7 c;
  c.d_s = g.distance(s, last);
  for (std::size_t k = 0; k < times.size(); ++k) {
    Corollary7Row row;
    row.t = times[k];
    row.value = prof.values[0][k];
    row.envelope = fit.envelope(c.d_s + 1.0, row.t, 1.0);
    row.margin = row.envelope - row.value;
    c.pass = c.pass && row.margin >= -1e-12;
    c.rows.push_back(row);
  }
  return c;
}

MemoryTime memory_time(const LindbladModel& model, std::span<const Index> s, const Matrix& rho0,
                       std::span<const double> times, double fraction) {
  if (times.empty()) throw ConfigError("memory time needs a time grid");
  if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("threshold fraction must lie in (0, 1)");
  const std::vector<Matrix> a = propagate_state(model, rho0, times);
  const std::vector<Matrix> b = propagate_state(model, dephase(rho0), times);
  std::vector<double> dist(times.size());
  for (std::size_t k = 0; k < times.size(); ++k)
    dist[k] = 0.5 * trace_norm(extract_block(a[k] - b[k], s));
  MemoryTime m;
  m.initial = dist[0];
  if (m.initial < kNoiseFloor) {
    m.incoherent = true;
    return m;
  }
  const double level = fraction * m.initial;
  for (std::size_t k = 0; k + 1 < times.size(); ++k)
    if (dist[k] <= level && dist[k + 1] <= level) {
      m.tau = times[k];
      return m;
    }
  m.never = true;
  m.tau = std::numeric_limits<double>::infinity();
  return m;
}

int truncation_radius(const LightConeFit& fit, double t, double eps, double norm_m) {
  if (!(eps > 0.0)) throw ConfigError("truncation tolerance must be positive");
  if (!(fit.mu > 0.0)) throw FitError("truncation radius needs mu > 0");
  const double r = (std::log(fit.c_ql * norm_m / eps) + fit.v_ql * t) / fit.mu;
  return std::max(0, static_cast<int>(std::ceil(r)));
}

TruncationReport truncation_experiment(const chain::ChainParams& p, std::span<const Index> s,
                                       std::span<const double> times, int radius, double eps,
                                       const PropagationOptions& opt) {
  TruncationReport rep;
  rep.radius = radius;
  rep.eps = eps;
  // Site n is at distance N - n + 1 from the sink.
  const int kept = std::clamp(radius, 2, p.n);
  const int shift = p.n - kept;
  rep.kept_sites = kept;
  std::vector<Index> s_trunc;
  for (Index i : s) {
    const Index site = i - 1;  // slot -> 1-based site
    if (site <= shift || site > p.n) throw PreconditionError("S lies outside the truncation radius");
    s_trunc.push_back(chain::slot(static_cast<int>(site - shift)));
  }
  chain::ChainParams q = p;
  q.n = kept;
  q.energies.assign(p.energies.end() - kept, p.energies.end());
  q.couplings.assign(p.couplings.end() - (kept - 1), p.couplings.end());

  const Index sink[1] = {chain::S};
  const LindbladModel full = chain::build_chain(p);
  const LindbladModel part = chain::build_chain(q);
  const Profile a = restricted_profile(full, projector(full.dim(), chain::S), sink,
                                       {std::vector<Index>(s.begin(), s.end())}, times, opt);
  const Profile b = restricted_profile(part, projector(part.dim(), chain::S), sink, {s_trunc},
                                       times, opt);
  for (std::size_t k = 0; k < times.size(); ++k)
    rep.max_deviation = std::max(rep.max_deviation, std::abs(a.values[0][k] - b.values[0][k]));
  rep.pass = rep.max_deviation <= 3.0 * eps;
  return rep;
}

}  // namespace cohimpact::lightcone
