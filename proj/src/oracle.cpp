#include "rgf/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "rgf/errors.hpp"

namespace rgf {

double ObjectiveStream::global_cost(std::size_t t, const Vector& x) const {
  double total = 0.0;
  for (std::size_t i = 0; i < n_agents(); ++i) total += eval(i, t, x);
  return total;
}

namespace {

std::vector<double> sample_normalized(Engine& eng, std::size_t n) {
  std::uniform_real_distribution<double> unif(0.5, 1.5);
  std::vector<double> v(n);
  for (double& e : v) e = unif(eng);
  const double scale = static_cast<double>(n) / std::accumulate(v.begin(), v.end(), 0.0);
  for (double& e : v) e *= scale;
  return v;
}

}  // namespace

PaperQuadraticStream::PaperQuadraticStream(std::size_t n_agents, std::uint64_t coeff_seed, double half_width)
    : half_width_(half_width) {
  if (n_agents == 0) throw ValidationError("paper_quadratic needs at least one agent");
  if (!(half_width > 0.0)) throw ValidationError("paper_quadratic half_width must be positive");
  Engine eng = RngStream(coeff_seed).engine(StreamTag::kCoefficients);
  a_ = sample_normalized(eng, n_agents);
  b_ = sample_normalized(eng, n_agents);
  c_ = sample_normalized(eng, n_agents);
}

double PaperQuadraticStream::drift(std::size_t t) {
  if (t == 0) return 0.016;  // limit of 2 sin(0.008 t) / t
  const double tt = static_cast<double>(t);
  return 2.0 * std::sin(0.008 * tt) / tt;
}

double PaperQuadraticStream::eval(std::size_t agent, std::size_t t, const Vector& x) const {
  const double d = drift(t);
  const double v = x[0];
  return a_[agent] * v * v - 2.0 * b_[agent] * d * v + c_[agent] * d * d;
}

std::optional<Vector> PaperQuadraticStream::analytic_minimizer(std::size_t t) const {
  return Vector::Constant(1, drift(t));
}

std::optional<double> PaperQuadraticStream::subgradient_bound() const {
  // |f_i'(x)| = |2 a_i x - 2 b_i d(t)| with |x| <= h and |d(t)| <= 0.016.
  double bound = 0.0;
  for (std::size_t i = 0; i < a_.size(); ++i) {
    bound = std::max(bound, 2.0 * a_[i] * half_width_ + 2.0 * b_[i] * 0.016);
  }
  return bound;
}

LinearProbeStream::LinearProbeStream(std::vector<Vector> directions) : dirs_(std::move(directions)) {
  if (dirs_.empty()) throw ValidationError("linear_probe needs at least one agent");
  for (const Vector& d : dirs_) {
    if (d.size() != dirs_.front().size() || d.size() == 0) {
      throw ValidationError("linear_probe directions must share a positive dimension");
    }
  }
}

double LinearProbeStream::eval(std::size_t agent, std::size_t, const Vector& x) const {
  return dirs_[agent].dot(x);
}

std::optional<double> LinearProbeStream::subgradient_bound() const {
  double bound = 0.0;
  for (const Vector& d : dirs_) bound = std::max(bound, d.norm());
  return bound;
}

ScaledNormStream::ScaledNormStream(std::size_t n_agents, double scale, Vector center)
    : n_(n_agents), scale_(scale), center_(std::move(center)) {
  if (n_ == 0 || center_.size() == 0) throw ValidationError("scaled_norm needs agents and a positive dimension");
  if (!(scale_ >= 0.0)) throw ValidationError("scaled_norm scale must be nonnegative");
}

SquaredNormStream::SquaredNormStream(std::size_t n_agents, Vector center) : n_(n_agents), center_(std::move(center)) {
  if (n_ == 0 || center_.size() == 0) throw ValidationError("squared_norm needs agents and a positive dimension");
}

std::unique_ptr<ObjectiveStream> make_stream(const StreamSpec& spec) {
  if (spec.n_agents == 0) throw ValidationError("stream needs at least one agent");
  if (spec.name == "paper_quadratic") {
    if (spec.dim != 1) throw ValidationError("paper_quadratic is one-dimensional");
    return std::make_unique<PaperQuadraticStream>(spec.n_agents, spec.coeff_seed, spec.half_width);
  }
  if (spec.name == "linear_probe") {
    if (spec.dim == 0) throw ValidationError("linear_probe needs dim >= 1");
    Engine eng = RngStream(spec.coeff_seed).engine(StreamTag::kCoefficients);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    std::vector<Vector> dirs(spec.n_agents, Vector(static_cast<Eigen::Index>(spec.dim)));
    for (Vector& d : dirs)
      for (Eigen::Index k = 0; k < d.size(); ++k) d[k] = unif(eng);
    return std::make_unique<LinearProbeStream>(std::move(dirs));
  }
  if (spec.name == "constant") {
    if (spec.dim == 0) throw ValidationError("constant stream needs dim >= 1");
    return std::make_unique<ConstantStream>(spec.n_agents, spec.dim);
  }
  throw ValidationError(fmt::format("unknown stream '{}'", spec.name));
}

std::vector<std::string> stream_names() { return {"paper_quadratic", "linear_probe", "constant"}; }

std::string_view to_string(DirectionLaw law) {
  return law == DirectionLaw::kGaussian ? "gaussian" : "uniform_sphere";
}

DirectionLaw direction_law_from_string(std::string_view s) {
  if (s == "gaussian") return DirectionLaw::kGaussian;
  if (s == "uniform_sphere") return DirectionLaw::kUniformSphere;
  throw ValidationError(fmt::format("unknown direction law '{}'", s));
}

OracleConfig OracleConfig::uniform(std::size_t n_agents, double mu, DirectionLaw law, std::uint64_t seed) {
  return OracleConfig{std::vector<double>(n_agents, mu), law, seed};
}

double OracleConfig::mu_hat() const {
  if (mu.empty()) return 0.0;
  return *std::max_element(mu.begin(), mu.end());
}

void OracleConfig::validate(std::size_t n_agents) const {
  if (mu.size() != n_agents) {
    throw ValidationError(fmt::format("expected {} smoothing parameters, got {}", n_agents, mu.size()));
  }
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (!(mu[i] > 0.0) || !std::isfinite(mu[i])) {
      throw ValidationError(fmt::format("mu[{}] = {} must be positive and finite", i, mu[i]));
    }
  }
}

Vector sample_direction(const OracleConfig& cfg, std::size_t agent, std::size_t t, std::size_t dim) {
  Engine eng = RngStream(cfg.rng_seed).engine(StreamTag::kDirection, agent, t);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector xi(static_cast<Eigen::Index>(dim));
  if (cfg.law == DirectionLaw::kGaussian) {
    for (Eigen::Index k = 0; k < xi.size(); ++k) xi[k] = normal(eng);
    return xi;
  }
  double norm = 0.0;
  do {
    for (Eigen::Index k = 0; k < xi.size(); ++k) xi[k] = normal(eng);
    norm = xi.norm();
  } while (norm == 0.0);
  return xi / norm;
}

OracleSample gradient_free_oracle_sample(const ObjectiveStream& stream, const OracleConfig& cfg,
                                         std::size_t agent, std::size_t t, const Vector& x) {
  if (agent >= cfg.mu.size()) throw ValidationError(fmt::format("agent {} has no smoothing parameter", agent));
  const double mu = cfg.mu[agent];
  if (!(mu > 0.0)) throw ValidationError(fmt::format("mu[{}] must be positive", agent));
  OracleSample s;
  s.direction = sample_direction(cfg, agent, t, static_cast<std::size_t>(x.size()));
  s.f_shifted = stream.eval(agent, t, x + mu * s.direction);
  s.f_base = stream.eval(agent, t, x);
  if (!std::isfinite(s.f_shifted) || !std::isfinite(s.f_base)) {
    throw NumericalError(fmt::format("non-finite objective value for agent {} at t = {}", agent, t));
  }
  s.gradient = ((s.f_shifted - s.f_base) / mu) * s.direction;
  return s;
}

MonteCarloEstimate smoothed_value_mc(const ObjectiveStream& stream, std::size_t agent, std::size_t t,
                                     const Vector& x, double mu, std::size_t n_samples, std::uint64_t seed) {
  if (n_samples == 0) throw ValidationError("smoothed_value_mc needs at least one sample");
  Engine eng = RngStream(seed).engine(StreamTag::kSmoothing);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector xi(x.size());
  // Welford accumulation keeps the variance stable for large n.
  double mean = 0.0, m2 = 0.0;
  for (std::size_t k = 0; k < n_samples; ++k) {
    for (Eigen::Index j = 0; j < xi.size(); ++j) xi[j] = normal(eng);
    const double v = stream.eval(agent, t, x + mu * xi);
    const double delta = v - mean;
    mean += delta / static_cast<double>(k + 1);
    m2 += delta * (v - mean);
  }
  MonteCarloEstimate est;
  est.mean = mean;
  if (n_samples > 1) {
    const double var = m2 / static_cast<double>(n_samples - 1);
    est.std_error = std::sqrt(var / static_cast<double>(n_samples));
  }
  return est;
}

}  // namespace rgf
