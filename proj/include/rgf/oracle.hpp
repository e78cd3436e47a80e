#pragma once

// Objective streams revealed only through point evaluations, and the
// two-point randomized gradient-free oracle built on them.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "rgf/rng.hpp"

namespace rgf {

using Vector = Eigen::VectorXd;

/// Time-indexed family of local convex costs f_i^t : R^p -> R.
/// Implementations must be side-effect free; eval may be called concurrently.
class ObjectiveStream {
 public:
  virtual ~ObjectiveStream() = default;

  virtual std::size_t n_agents() const = 0;
  virtual std::size_t dim() const = 0;
  virtual double eval(std::size_t agent, std::size_t t, const Vector& x) const = 0;

  /// Minimizer of the aggregate sum_i f_i^t over the feasible set, when known.
  virtual std::optional<Vector> analytic_minimizer(std::size_t /*t*/) const { return std::nullopt; }

  /// Uniform bound on subgradient norms over the feasible set, when known.
  virtual std::optional<double> subgradient_bound() const { return std::nullopt; }

  virtual std::string name() const = 0;

  /// sum_i f_i^t(x).
  double global_cost(std::size_t t, const Vector& x) const;
};

/// f_i^t(x) = a_i x^2 - 2 b_i d(t) x + c_i d(t)^2 with d(t) = 2 sin(0.008 t) / t,
/// d(0) = 0.016. Coefficients are positive and each family sums to N, so the
/// aggregate is N (x - d(t))^2 and its minimizer is d(t).
class PaperQuadraticStream final : public ObjectiveStream {
 public:
  /// `half_width` is the radius of the box [-h, h] the bound D-hat refers to.
  PaperQuadraticStream(std::size_t n_agents, std::uint64_t coeff_seed, double half_width = 5.0);

  static double drift(std::size_t t);

  std::size_t n_agents() const override { return a_.size(); }
  std::size_t dim() const override { return 1; }
  double eval(std::size_t agent, std::size_t t, const Vector& x) const override;
  std::optional<Vector> analytic_minimizer(std::size_t t) const override;
  std::optional<double> subgradient_bound() const override;
  std::string name() const override { return "paper_quadratic"; }

  const std::vector<double>& a() const { return a_; }
  const std::vector<double>& b() const { return b_; }
  const std::vector<double>& c() const { return c_; }

 private:
  std::vector<double> a_, b_, c_;
  double half_width_;
};

/// f_i^t(x) = <d_i, x>. Time-invariant; D-hat = max_i ||d_i||.
class LinearProbeStream final : public ObjectiveStream {
 public:
  explicit LinearProbeStream(std::vector<Vector> directions);

  std::size_t n_agents() const override { return dirs_.size(); }
  std::size_t dim() const override { return static_cast<std::size_t>(dirs_.front().size()); }
  double eval(std::size_t agent, std::size_t t, const Vector& x) const override;
  std::optional<double> subgradient_bound() const override;
  std::string name() const override { return "linear_probe"; }

 private:
  std::vector<Vector> dirs_;
};

/// f_i^t(x) = value; the oracle is identically zero.
class ConstantStream final : public ObjectiveStream {
 public:
  ConstantStream(std::size_t n_agents, std::size_t dim, double value = 0.0)
      : n_(n_agents), p_(dim), value_(value) {}

  std::size_t n_agents() const override { return n_; }
  std::size_t dim() const override { return p_; }
  double eval(std::size_t, std::size_t, const Vector&) const override { return value_; }
  std::optional<double> subgradient_bound() const override { return 0.0; }
  std::string name() const override { return "constant"; }

 private:
  std::size_t n_, p_;
  double value_;
};

/// f_i^t(x) = scale * ||x - center||: convex, nonsmooth at the center,
/// Lipschitz with constant `scale`.
class ScaledNormStream final : public ObjectiveStream {
 public:
  ScaledNormStream(std::size_t n_agents, double scale, Vector center);

  std::size_t n_agents() const override { return n_; }
  std::size_t dim() const override { return static_cast<std::size_t>(center_.size()); }
  double eval(std::size_t, std::size_t, const Vector& x) const override { return scale_ * (x - center_).norm(); }
  std::optional<Vector> analytic_minimizer(std::size_t) const override { return center_; }
  std::optional<double> subgradient_bound() const override { return scale_; }
  std::string name() const override { return "scaled_norm"; }

 private:
  std::size_t n_;
  double scale_;
  Vector center_;
};

/// f_i^t(x) = ||x - center||^2. Smooth; no global subgradient bound.
class SquaredNormStream final : public ObjectiveStream {
 public:
  SquaredNormStream(std::size_t n_agents, Vector center);
  std::size_t n_agents() const override { return n_; }
  std::size_t dim() const override { return static_cast<std::size_t>(center_.size()); }
  double eval(std::size_t, std::size_t, const Vector& x) const override { return (x - center_).squaredNorm(); }
  std::optional<Vector> analytic_minimizer(std::size_t) const override { return center_; }
  std::string name() const override { return "squared_norm"; }

 private:
  std::size_t n_;
  Vector center_;
};

struct StreamSpec {
  std::string name = "paper_quadratic";
  std::size_t n_agents = 10;
  std::size_t dim = 1;
  std::uint64_t coeff_seed = 1;
  double half_width = 5.0;
};

/// Registry: "paper_quadratic", "linear_probe", "constant".
/// Throws ValidationError for unknown names or shapes a stream cannot take.
std::unique_ptr<ObjectiveStream> make_stream(const StreamSpec& spec);
std::vector<std::string> stream_names();

enum class DirectionLaw { kGaussian, kUniformSphere };

std::string_view to_string(DirectionLaw law);
DirectionLaw direction_law_from_string(std::string_view s);

struct OracleConfig {
  std::vector<double> mu;  // per-agent smoothing, all > 0
  DirectionLaw law = DirectionLaw::kGaussian;
  std::uint64_t rng_seed = 0;

  static OracleConfig uniform(std::size_t n_agents, double mu, DirectionLaw law, std::uint64_t seed);

  double mu_hat() const;
  /// Throws ValidationError unless every mu is finite and positive.
  void validate(std::size_t n_agents) const;
};

/// xi^i(t): i.i.d. N(0, 1) coordinates, or uniform on the unit sphere.
/// Pure function of (rng_seed, agent, t).
Vector sample_direction(const OracleConfig& cfg, std::size_t agent, std::size_t t, std::size_t dim);

struct OracleSample {
  Vector gradient;
  Vector direction;
  double f_base = 0.0;
  double f_shifted = 0.0;
};

/// [f(x + mu xi) - f(x)] / mu * xi with xi = sample_direction(cfg, agent, t).
/// Exactly two stream evaluations. Throws NumericalError on non-finite values.
OracleSample gradient_free_oracle_sample(const ObjectiveStream& stream, const OracleConfig& cfg,
                                         std::size_t agent, std::size_t t, const Vector& x);

inline Vector gradient_free_oracle(const ObjectiveStream& stream, const OracleConfig& cfg, std::size_t agent,
                                   std::size_t t, const Vector& x) {
  return gradient_free_oracle_sample(stream, cfg, agent, t, x).gradient;
}

struct MonteCarloEstimate {
  double mean = 0.0;
  double std_error = 0.0;  // sample std / sqrt(n)
};

/// (1/n) sum_k f(x + mu xi_k) with xi_k ~ N(0, I). Deterministic in `seed`.
MonteCarloEstimate smoothed_value_mc(const ObjectiveStream& stream, std::size_t agent, std::size_t t,
                                     const Vector& x, double mu, std::size_t n_samples, std::uint64_t seed);

}  // namespace rgf
