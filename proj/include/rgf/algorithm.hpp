#pragma once

// Projected two-variable (decision + surplus) update driven by the
// gradient-free oracle, and the loop that runs it over a horizon.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "rgf/graph.hpp"
#include "rgf/oracle.hpp"

namespace rgf {

/// Closed convex compact set with a closed-form Euclidean projection.
class FeasibleSet {
 public:
  struct Box {
    Vector lo, hi;
  };
  struct Ball {
    Vector center;
    double radius = 0.0;
  };

  static FeasibleSet box(Vector lo, Vector hi);
  /// [lo, hi]^dim
  static FeasibleSet interval(double lo, double hi, std::size_t dim);
  static FeasibleSet ball(Vector center, double radius);

  std::size_t dim() const;
  Vector project(const Vector& v) const;
  bool contains(const Vector& v, double tol = 0.0) const;
  /// sup over the set of ||x||.
  double radius_bound() const;
  /// Uniform sample from the set.
  Vector sample(Engine& eng) const;

  const std::variant<Box, Ball>& shape() const { return shape_; }

 private:
  explicit FeasibleSet(std::variant<Box, Ball> s) : shape_(std::move(s)) {}
  std::variant<Box, Ball> shape_;
};

/// Positive, non-increasing step sizes gamma(t).
class StepSchedule {
 public:
  enum class Kind { kInvSqrt, kConstant, kTable };

  /// gamma(t) = gamma0 / sqrt(t + 1)
  static StepSchedule inv_sqrt(double gamma0);
  static StepSchedule constant(double gamma);
  /// Table values must be positive and non-increasing; the last entry
  /// holds for every t past the end of the table.
  static StepSchedule table(std::vector<double> values);

  double operator()(std::size_t t) const;
  Kind kind() const { return kind_; }
  /// gamma0 for inv_sqrt, the constant for constant, the first entry for tables.
  double initial() const { return (*this)(0); }
  /// Holds by construction for every kind: the tail never drops below a
  /// positive multiple of 1/sqrt(t).
  bool non_summable() const { return true; }
  std::string describe() const;

 private:
  StepSchedule(Kind k, double g, std::vector<double> tbl) : kind_(k), gamma_(g), table_(std::move(tbl)) {}
  Kind kind_;
  double gamma_;
  std::vector<double> table_;
};

struct AgentState {
  Vector x;  // decision, kept inside the feasible set
  Vector y;  // surplus
};

/// All agents stacked row-wise: x.row(i) is agent i's decision.
struct NetworkState {
  Eigen::MatrixXd x;
  Eigen::MatrixXd y;

  std::size_t agents() const { return static_cast<std::size_t>(x.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(x.cols()); }
  AgentState agent(std::size_t i) const;
  static NetworkState from_agents(std::span<const AgentState> agents);
};

/// x^i(0) uniform in the set (one substream per agent), y^i(0) = 0.
NetworkState initial_state(const FeasibleSet& domain, std::size_t n_agents, std::uint64_t seed);

struct StepOutput {
  NetworkState next;
  Eigen::MatrixXd oracle;  // row i: the oracle vector agent i used at time t
};

/// One synchronous round at time t. Every agent reads the time-t snapshot:
///   x+ = P[ sum_j Wr_ij x_j + delta y_i - gamma g_i ]
///   y+ = sum_j Wc_ij y_j - sum_j Wr_ij x_j + x_i - delta y_i
/// Throws NumericalError naming the agent and time on non-finite state.
StepOutput step_all(const NetworkState& state, const WeightPair& wp, double delta, double gamma_t,
                    const ObjectiveStream& stream, const OracleConfig& cfg, const FeasibleSet& domain,
                    std::size_t t);

struct ThetaResidual {
  Eigen::MatrixXd theta;  // theta_i = x_i(t+1) - sum_j Wr_ij x_j(t) - delta y_i(t)
  double total = 0.0;     // sum_i ||theta_i||
};

ThetaResidual theta_residual(const NetworkState& before, const NetworkState& after, const WeightPair& wp,
                             double delta);

/// (1/N) sum_i (x_i + y_i): the mean of the stacked augmented state.
Vector augmented_mean(const NetworkState& s);

/// max_i ||x_i - mean_j x_j||.
double consensus_spread(const Eigen::MatrixXd& x);

struct Simulation {
  WeightPair weights;
  double delta = 0.1;
  StepSchedule schedule = StepSchedule::inv_sqrt(1.0);
  std::shared_ptr<const ObjectiveStream> stream;
  OracleConfig oracle;
  FeasibleSet domain = FeasibleSet::interval(-5.0, 5.0, 1);
  std::size_t horizon = 0;
  std::uint64_t init_seed = 0;
  std::optional<NetworkState> initial;  // overrides init_seed when set
  bool record_internals = true;         // y, oracle and theta per step
};

/// Time series for t = 0..T (states) and t = 0..T-1 (transitions).
struct Trace {
  std::vector<Eigen::MatrixXd> x;
  std::vector<Eigen::MatrixXd> y;                 // empty unless record_internals
  std::vector<std::vector<double>> global_cost;  // [t][i] = f^t(x^i(t))
  std::vector<double> spread;
  std::vector<Vector> x_star;  // empty when the stream has no analytic minimizer
  std::vector<Vector> augmented_mean;

  std::vector<double> gamma;
  std::vector<Eigen::MatrixXd> oracle;  // empty unless record_internals
  std::vector<Eigen::MatrixXd> theta;   // empty unless record_internals
  std::vector<double> theta_total;

  std::size_t horizon() const { return x.empty() ? 0 : x.size() - 1; }
  std::size_t agents() const { return x.empty() ? 0 : static_cast<std::size_t>(x.front().rows()); }
  std::size_t dim() const { return x.empty() ? 0 : static_cast<std::size_t>(x.front().cols()); }
};

/// Runs step_all for t = 0..horizon-1. Deterministic in the seeds.
Trace simulate(const Simulation& sim);

}  // namespace rgf
