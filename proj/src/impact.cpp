#include "cohimpact/impact.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "cohimpact/errors.hpp"
#include "cohimpact/parallel.hpp"

namespace cohimpact {

double impact_of(const Matrix& mt) { return operator_norm(offdiag_part(mt)); }

std::vector<ImpactPoint> impact_from_series(const HeisenbergSeries& series) {
  std::vector<ImpactPoint> out;
  out.reserve(series.times.size());
  for (std::size_t k = 0; k < series.times.size(); ++k)
    out.push_back({series.times[k], impact_of(series.matrices[k])});
  return out;
}

namespace {

double sample_chunk(const Matrix& b, std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double best = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const Vector psi = random_pure_vector(b.rows(), rng);
    best = std::max(best, std::abs(psi.dot(b * psi)));
  }
  return best;
}

std::size_t chunk_count(std::size_t samples) { return (samples + kSampleChunk - 1) / kSampleChunk; }

std::size_t chunk_size(std::size_t samples, std::size_t c) {
  return std::min(kSampleChunk, samples - c * kSampleChunk);
}

}  // namespace

double brute_force_impact(const Matrix& mt, std::size_t samples, std::uint64_t seed) {
  if (samples == 0) throw PreconditionError("need at least one sample");
  const Matrix b = offdiag_part(mt);
  const long chunks = static_cast<long>(chunk_count(samples));
  double best = 0.0;
#pragma omp parallel for schedule(static) reduction(max : best) num_threads(worker_count())
  for (long c = 0; c < chunks; ++c) {
    const auto uc = static_cast<std::size_t>(c);
    best = std::max(best, sample_chunk(b, chunk_size(samples, uc), chunk_seed(seed, uc)));
  }
  return best;
}

double brute_force_impact_serial(const Matrix& mt, std::size_t samples, std::uint64_t seed) {
  if (samples == 0) throw PreconditionError("need at least one sample");
  const Matrix b = offdiag_part(mt);
  double best = 0.0;
  for (std::size_t c = 0; c < chunk_count(samples); ++c)
    best = std::max(best, sample_chunk(b, chunk_size(samples, c), chunk_seed(seed, c)));
  return best;
}

StateFamily StateFamily::finite(std::vector<Matrix> states) {
  StateFamily f;
  f.members = std::move(states);
  return f;
}

StateFamily StateFamily::incoherent(Index dim) {
  StateFamily f;
  f.sampler = [dim](std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Matrix rho = Matrix::Zero(dim, dim);
    double total = 0.0;
    for (Index i = 0; i < dim; ++i) {
      const double p = -std::log(1.0 - u(rng));
      rho(i, i) = p;
      total += p;
    }
    return Matrix(rho / total);
  };
  return f;
}

StateFamily StateFamily::pure(Index dim) {
  StateFamily f;
  f.sampler = [dim](std::mt19937_64& rng) { return pure_density(random_pure_vector(dim, rng)); };
  return f;
}

double restricted_impact(const Matrix& mt, const StateFamily& family, std::size_t samples,
                         std::uint64_t seed) {
  if (family.members.empty() && !family.sampler) throw PreconditionError("empty state family");
  const Matrix b = offdiag_part(mt);
  auto value = [&b](const Matrix& rho) { return std::abs((b * rho).trace()); };
  double best = 0.0;
  for (const Matrix& rho : family.members) best = std::max(best, value(rho));
  if (family.sampler) {
    if (samples == 0) throw PreconditionError("need at least one sample");
    for (std::size_t c = 0; c < chunk_count(samples); ++c) {
      std::mt19937_64 rng(chunk_seed(seed, c));
      for (std::size_t i = 0; i < chunk_size(samples, c); ++i) best = std::max(best, value(family.sampler(rng)));
    }
  }
  return best;
}

double support_restricted_impact(const Matrix& mt, std::span<const Index> s) {
  require_square(mt, "observable");
  if (s.empty()) throw PreconditionError("support subset is empty");
  std::set<Index> seen;
  for (Index i : s)
    if (i < 0 || i >= mt.rows() || !seen.insert(i).second) throw PreconditionError("invalid support subset");
  return operator_norm(offdiag_part(extract_block(mt, s)));
}

std::vector<UtilizationPoint> utilization(const HeisenbergSeries& series, const Matrix& rho0) {
  DensityState checked(rho0);
  const Matrix coh = rho0 - dephase(rho0);
  std::vector<UtilizationPoint> out;
  for (std::size_t k = 0; k < series.times.size(); ++k) {
    UtilizationPoint p;
    p.t = series.times[k];
    p.delta_y = (series.matrices[k] * coh).trace().real();
    p.impact = impact_of(series.matrices[k]);
    if (p.impact >= 1e-12) p.ratio = std::abs(p.delta_y) / p.impact;
    out.push_back(p);
  }
  return out;
}

std::vector<UtilizationPoint> utilization(const LindbladModel& model, const Matrix& rho0,
                                          const Matrix& m, std::span<const double> times) {
  return utilization(heisenberg_evolve(model, m, times), rho0);
}

}  // namespace cohimpact
