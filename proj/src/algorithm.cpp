#include "rgf/algorithm.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "rgf/errors.hpp"

namespace rgf {

namespace {

void require_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) throw ValidationError(fmt::format("{} must be finite", what));
}

}  // namespace

FeasibleSet FeasibleSet::box(Vector lo, Vector hi) {
  if (lo.size() == 0 || lo.size() != hi.size()) throw ValidationError("box bounds must share a positive dimension");
  require_finite(lo, "box lower bound");
  require_finite(hi, "box upper bound");
  if ((lo.array() > hi.array()).any()) throw ValidationError("box lower bound exceeds upper bound");
  return FeasibleSet(Box{std::move(lo), std::move(hi)});
}

FeasibleSet FeasibleSet::interval(double lo, double hi, std::size_t dim) {
  const auto p = static_cast<Eigen::Index>(dim);
  return box(Vector::Constant(p, lo), Vector::Constant(p, hi));
}

FeasibleSet FeasibleSet::ball(Vector center, double radius) {
  if (center.size() == 0) throw ValidationError("ball center needs a positive dimension");
  require_finite(center, "ball center");
  if (!(radius >= 0.0) || !std::isfinite(radius)) throw ValidationError("ball radius must be finite and >= 0");
  return FeasibleSet(Ball{std::move(center), radius});
}

std::size_t FeasibleSet::dim() const {
  return std::visit(
      [](const auto& s) -> std::size_t {
        if constexpr (std::is_same_v<std::decay_t<decltype(s)>, Box>) {
          return static_cast<std::size_t>(s.lo.size());
        } else {
          return static_cast<std::size_t>(s.center.size());
        }
      },
      shape_);
}

Vector FeasibleSet::project(const Vector& v) const {
  if (static_cast<std::size_t>(v.size()) != dim()) {
    throw ValidationError(fmt::format("projection of a {}-vector onto a {}-dimensional set", v.size(), dim()));
  }
  if (const auto* b = std::get_if<Box>(&shape_)) return v.cwiseMax(b->lo).cwiseMin(b->hi);
  const auto& ball = std::get<Ball>(shape_);
  const Vector offset = v - ball.center;
  const double dist = offset.norm();
  if (dist <= ball.radius) return v;
  return ball.center + (ball.radius / dist) * offset;
}

bool FeasibleSet::contains(const Vector& v, double tol) const {
  if (static_cast<std::size_t>(v.size()) != dim()) return false;
  if (const auto* b = std::get_if<Box>(&shape_)) {
    return ((v.array() >= b->lo.array() - tol) && (v.array() <= b->hi.array() + tol)).all();
  }
  const auto& ball = std::get<Ball>(shape_);
  return (v - ball.center).norm() <= ball.radius + tol;
}

double FeasibleSet::radius_bound() const {
  if (const auto* b = std::get_if<Box>(&shape_)) {
    return b->lo.cwiseAbs().cwiseMax(b->hi.cwiseAbs()).norm();
  }
  const auto& ball = std::get<Ball>(shape_);
  return ball.center.norm() + ball.radius;
}

Vector FeasibleSet::sample(Engine& eng) const {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  if (const auto* b = std::get_if<Box>(&shape_)) {
    Vector v(b->lo.size());
    for (Eigen::Index k = 0; k < v.size(); ++k) v[k] = b->lo[k] + (b->hi[k] - b->lo[k]) * unif(eng);
    return v;
  }
  const auto& ball = std::get<Ball>(shape_);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector dir(ball.center.size());
  double norm = 0.0;
  do {
    for (Eigen::Index k = 0; k < dir.size(); ++k) dir[k] = normal(eng);
    norm = dir.norm();
  } while (norm == 0.0);
  const double r = ball.radius * std::pow(unif(eng), 1.0 / static_cast<double>(dir.size()));
  return ball.center + (r / norm) * dir;
}

StepSchedule StepSchedule::inv_sqrt(double gamma0) {
  if (!(gamma0 > 0.0) || !std::isfinite(gamma0)) throw ValidationError("gamma0 must be positive and finite");
  return StepSchedule(Kind::kInvSqrt, gamma0, {});
}

StepSchedule StepSchedule::constant(double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ValidationError("constant step must be positive and finite");
  return StepSchedule(Kind::kConstant, gamma, {});
}

StepSchedule StepSchedule::table(std::vector<double> values) {
  if (values.empty()) throw ValidationError("step table is empty");
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (!(values[k] > 0.0) || !std::isfinite(values[k])) {
      throw ValidationError(fmt::format("step table entry {} = {} must be positive", k, values[k]));
    }
    if (k > 0 && values[k] > values[k - 1]) {
      throw ValidationError(fmt::format("step table increases at entry {}", k));
    }
  }
  return StepSchedule(Kind::kTable, 0.0, std::move(values));
}

double StepSchedule::operator()(std::size_t t) const {
  switch (kind_) {
    case Kind::kInvSqrt:
      return gamma_ / std::sqrt(static_cast<double>(t) + 1.0);
    case Kind::kConstant:
      return gamma_;
    case Kind::kTable:
      return table_[std::min(t, table_.size() - 1)];
  }
  return gamma_;
}

std::string StepSchedule::describe() const {
  switch (kind_) {
    case Kind::kInvSqrt:
      return fmt::format("inv_sqrt(gamma0={})", gamma_);
    case Kind::kConstant:
      return fmt::format("constant({})", gamma_);
    case Kind::kTable:
      return fmt::format("table({} entries)", table_.size());
  }
  return {};
}

AgentState NetworkState::agent(std::size_t i) const {
  const auto r = static_cast<Eigen::Index>(i);
  return AgentState{x.row(r).transpose(), y.row(r).transpose()};
}

NetworkState NetworkState::from_agents(std::span<const AgentState> agents) {
  if (agents.empty()) throw ValidationError("network needs at least one agent");
  const Eigen::Index p = agents.front().x.size();
  NetworkState s{Eigen::MatrixXd(static_cast<Eigen::Index>(agents.size()), p),
                 Eigen::MatrixXd(static_cast<Eigen::Index>(agents.size()), p)};
  for (std::size_t i = 0; i < agents.size(); ++i) {
    if (agents[i].x.size() != p || agents[i].y.size() != p) {
      throw ValidationError(fmt::format("agent {} has inconsistent dimension", i));
    }
    s.x.row(static_cast<Eigen::Index>(i)) = agents[i].x.transpose();
    s.y.row(static_cast<Eigen::Index>(i)) = agents[i].y.transpose();
  }
  return s;
}

NetworkState initial_state(const FeasibleSet& domain, std::size_t n_agents, std::uint64_t seed) {
  const auto n = static_cast<Eigen::Index>(n_agents);
  const auto p = static_cast<Eigen::Index>(domain.dim());
  NetworkState s{Eigen::MatrixXd(n, p), Eigen::MatrixXd::Zero(n, p)};
  const RngStream rng(seed);
  for (Eigen::Index i = 0; i < n; ++i) {
    Engine eng = rng.engine(StreamTag::kInitialState, static_cast<std::uint64_t>(i), 0);
    s.x.row(i) = domain.sample(eng).transpose();
  }
  return s;
}

StepOutput step_all(const NetworkState& state, const WeightPair& wp, double delta, double gamma_t,
                    const ObjectiveStream& stream, const OracleConfig& cfg, const FeasibleSet& domain,
                    std::size_t t) {
  const std::size_t n = state.agents();
  if (wp.size() != n || stream.n_agents() != n) {
    throw ValidationError(fmt::format("step_all: {} agents but weights for {} and stream for {}", n, wp.size(),
                                      stream.n_agents()));
  }
  if (!(gamma_t > 0.0)) throw ValidationError(fmt::format("step size at t = {} must be positive", t));

  const Eigen::MatrixXd mixed = wp.row * state.x;
  StepOutput out;
  out.oracle.resize(state.x.rows(), state.x.cols());
  out.next.x.resize(state.x.rows(), state.x.cols());
  out.next.y = wp.col * state.y - mixed + state.x - delta * state.y;

  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const Vector xi = state.x.row(r).transpose();
    const Vector g = gradient_free_oracle(stream, cfg, i, t, xi);
    out.oracle.row(r) = g.transpose();
    const Vector target = mixed.row(r).transpose() + delta * state.y.row(r).transpose() - gamma_t * g;
    out.next.x.row(r) = domain.project(target).transpose();
    if (!out.next.x.row(r).allFinite() || !out.next.y.row(r).allFinite()) {
      throw NumericalError(fmt::format("non-finite state for agent {} at t = {}", i, t + 1));
    }
  }
  return out;
}

ThetaResidual theta_residual(const NetworkState& before, const NetworkState& after, const WeightPair& wp,
                             double delta) {
  ThetaResidual res;
  res.theta = after.x - wp.row * before.x - delta * before.y;
  res.total = res.theta.rowwise().norm().sum();
  return res;
}

Vector augmented_mean(const NetworkState& s) {
  return (s.x.colwise().sum() + s.y.colwise().sum()).transpose() / static_cast<double>(s.agents());
}

double consensus_spread(const Eigen::MatrixXd& x) {
  const Eigen::RowVectorXd mean = x.colwise().mean();
  return (x.rowwise() - mean).rowwise().norm().maxCoeff();
}

Trace simulate(const Simulation& sim) {
  if (!sim.stream) throw ValidationError("simulation has no objective stream");
  const ObjectiveStream& stream = *sim.stream;
  const std::size_t n = sim.weights.size();
  if (stream.n_agents() != n) {
    throw ValidationError(fmt::format("stream has {} agents, weights have {}", stream.n_agents(), n));
  }
  if (stream.dim() != sim.domain.dim()) {
    throw ValidationError(fmt::format("stream dimension {} differs from domain dimension {}", stream.dim(),
                                      sim.domain.dim()));
  }
  if (!(sim.delta > 0.0) || !std::isfinite(sim.delta)) throw ValidationError("delta must be positive");
  sim.oracle.validate(n);

  NetworkState state = sim.initial ? *sim.initial : initial_state(sim.domain, n, sim.init_seed);
  if (state.agents() != n || state.dim() != stream.dim()) throw ValidationError("initial state has the wrong shape");
  for (std::size_t i = 0; i < n; ++i) {
    if (!sim.domain.contains(state.x.row(static_cast<Eigen::Index>(i)).transpose(), 1e-12)) {
      throw ValidationError(fmt::format("initial decision of agent {} lies outside the feasible set", i));
    }
  }

  Trace trace;
  const std::size_t steps = sim.horizon + 1;
  trace.x.reserve(steps);
  trace.global_cost.reserve(steps);
  trace.spread.reserve(steps);
  trace.augmented_mean.reserve(steps);
  const bool has_star = stream.analytic_minimizer(0).has_value();

  auto record_state = [&](std::size_t t, const NetworkState& s) {
    trace.x.push_back(s.x);
    if (sim.record_internals) trace.y.push_back(s.y);
    std::vector<double> costs(n);
    for (std::size_t i = 0; i < n; ++i) {
      costs[i] = stream.global_cost(t, s.x.row(static_cast<Eigen::Index>(i)).transpose());
    }
    trace.global_cost.push_back(std::move(costs));
    trace.spread.push_back(consensus_spread(s.x));
    trace.augmented_mean.push_back(augmented_mean(s));
    if (has_star) trace.x_star.push_back(*stream.analytic_minimizer(t));
  };

  record_state(0, state);
  for (std::size_t t = 0; t < sim.horizon; ++t) {
    const double gamma = sim.schedule(t);
    StepOutput step = step_all(state, sim.weights, sim.delta, gamma, stream, sim.oracle, sim.domain, t);
    const ThetaResidual th = theta_residual(state, step.next, sim.weights, sim.delta);
    trace.gamma.push_back(gamma);
    trace.theta_total.push_back(th.total);
    if (sim.record_internals) {
      trace.oracle.push_back(std::move(step.oracle));
      trace.theta.push_back(th.theta);
    }
    state = std::move(step.next);
    record_state(t + 1, state);
  }
  return trace;
}

}  // namespace rgf
