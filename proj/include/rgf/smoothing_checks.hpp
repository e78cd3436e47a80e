#pragma once

// Monte Carlo checks of the Gaussian-smoothing properties the oracle relies
// on: the value sandwich, unbiasedness for the smoothed gradient, and the
// second-moment ceiling.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "rgf/oracle.hpp"

namespace rgf {

struct SandwichRow {
  Vector x;
  double f = 0;          // f(x)
  double smoothed = 0;   // MC estimate of f_mu(x)
  double std_error = 0;
  double upper = 0;      // f(x) + sqrt(p) mu D_hat
  bool within = false;   // f - 3 se <= smoothed <= upper + 3 se
};

/// Requires stream.subgradient_bound().
std::vector<SandwichRow> sandwich_table(const ObjectiveStream& stream, std::span<const Vector> points, double mu,
                                        std::size_t n_samples, std::uint64_t seed, std::size_t agent = 0,
                                        std::size_t t = 0);

struct UnbiasednessRow {
  Vector x;
  Vector oracle_mean;
  Vector oracle_std_error;
  Vector fd_gradient;  // central differences of the MC-smoothed value
  double max_z = 0;    // max_k |mean_k - fd_k| / se_k
  bool within = false; // max_z <= z_limit
};

/// Mean of n oracle draws (t = 0..n-1 as independent substreams of
/// `oracle_seed`) against central finite differences of smoothed_value_mc
/// with step h and the common seed `smoothing_seed`.
UnbiasednessRow unbiasedness_check(const ObjectiveStream& stream, const Vector& x, double mu, std::size_t n_samples,
                                   std::uint64_t oracle_seed, std::uint64_t smoothing_seed, double h = 1e-3,
                                   double z_limit = 4.0, std::size_t agent = 0);

struct SecondMomentRow {
  std::size_t dim = 0;
  double mean_sq_norm = 0;  // empirical E||g||^2
  double ceiling = 0;       // (p + 4)^2 D_hat^2
  bool within = false;
};

/// Requires stream.subgradient_bound(). Draws use t = 0..n-1.
SecondMomentRow second_moment_check(const ObjectiveStream& stream, const Vector& x, double mu, std::size_t n_samples,
                                    std::uint64_t oracle_seed, std::size_t agent = 0);

}  // namespace rgf
