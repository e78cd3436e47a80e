#include "rgf/smoothing_checks.hpp"

#include <cmath>

#include "rgf/errors.hpp"

namespace rgf {

namespace {

double require_bound(const ObjectiveStream& stream) {
  auto bound = stream.subgradient_bound();
  if (!bound) throw ValidationError("stream '" + stream.name() + "' has no subgradient bound");
  return *bound;
}

}  // namespace

std::vector<SandwichRow> sandwich_table(const ObjectiveStream& stream, std::span<const Vector> points, double mu,
                                        std::size_t n_samples, std::uint64_t seed, std::size_t agent, std::size_t t) {
  const double d_hat = require_bound(stream);
  const double root_p = std::sqrt(static_cast<double>(stream.dim()));
  std::vector<SandwichRow> rows;
  rows.reserve(points.size());
  for (std::size_t k = 0; k < points.size(); ++k) {
    SandwichRow row;
    row.x = points[k];
    row.f = stream.eval(agent, t, row.x);
    const auto est = smoothed_value_mc(stream, agent, t, row.x, mu, n_samples, derive_seed(seed, {k}));
    row.smoothed = est.mean;
    row.std_error = est.std_error;
    row.upper = row.f + root_p * mu * d_hat;
    row.within = row.f - 3.0 * row.std_error <= row.smoothed && row.smoothed <= row.upper + 3.0 * row.std_error;
    rows.push_back(std::move(row));
  }
  return rows;
}

UnbiasednessRow unbiasedness_check(const ObjectiveStream& stream, const Vector& x, double mu, std::size_t n_samples,
                                   std::uint64_t oracle_seed, std::uint64_t smoothing_seed, double h, double z_limit,
                                   std::size_t agent) {
  if (n_samples < 2) throw ValidationError("unbiasedness_check needs at least two samples");
  OracleConfig cfg;
  cfg.mu.assign(stream.n_agents(), mu);
  cfg.rng_seed = oracle_seed;
  const Eigen::Index p = x.size();
  Vector mean = Vector::Zero(p), m2 = Vector::Zero(p);
  for (std::size_t k = 0; k < n_samples; ++k) {
    const Vector g = gradient_free_oracle(stream, cfg, agent, k, x);
    const Vector delta = g - mean;
    mean += delta / static_cast<double>(k + 1);
    m2 += delta.cwiseProduct(g - mean);
  }
  UnbiasednessRow row;
  row.x = x;
  row.oracle_mean = mean;
  row.oracle_std_error = (m2 / static_cast<double>(n_samples - 1) / static_cast<double>(n_samples)).cwiseSqrt();
  row.fd_gradient.resize(p);
  for (Eigen::Index k = 0; k < p; ++k) {
    Vector up = x, down = x;
    up[k] += h;
    down[k] -= h;
    const double fu = smoothed_value_mc(stream, agent, 0, up, mu, n_samples, smoothing_seed).mean;
    const double fd = smoothed_value_mc(stream, agent, 0, down, mu, n_samples, smoothing_seed).mean;
    row.fd_gradient[k] = (fu - fd) / (2.0 * h);
  }
  for (Eigen::Index k = 0; k < p; ++k) {
    const double z = std::abs(row.oracle_mean[k] - row.fd_gradient[k]) / row.oracle_std_error[k];
    row.max_z = std::max(row.max_z, z);
  }
  row.within = row.max_z <= z_limit;
  return row;
}

SecondMomentRow second_moment_check(const ObjectiveStream& stream, const Vector& x, double mu, std::size_t n_samples,
                                    std::uint64_t oracle_seed, std::size_t agent) {
  if (n_samples == 0) throw ValidationError("second_moment_check needs samples");
  const double d_hat = require_bound(stream);
  OracleConfig cfg;
  cfg.mu.assign(stream.n_agents(), mu);
  cfg.rng_seed = oracle_seed;
  double sum = 0.0;
  for (std::size_t k = 0; k < n_samples; ++k) sum += gradient_free_oracle(stream, cfg, agent, k, x).squaredNorm();
  SecondMomentRow row;
  row.dim = stream.dim();
  row.mean_sq_norm = sum / static_cast<double>(n_samples);
  const double p = static_cast<double>(row.dim);
  row.ceiling = (p + 4.0) * (p + 4.0) * d_hat * d_hat;
  row.within = row.mean_sq_norm <= row.ceiling;
  return row;
}

}  // namespace rgf
