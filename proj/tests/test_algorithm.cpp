#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <memory>
#include <random>

#include "rgf/algorithm.hpp"
#include "rgf/errors.hpp"

using namespace rgf;

namespace {

class NanAtTime final : public ObjectiveStream {
 public:
  explicit NanAtTime(std::size_t n) : n_(n) {}
  std::size_t n_agents() const override { return n_; }
  std::size_t dim() const override { return 1; }
  double eval(std::size_t agent, std::size_t t, const Vector& x) const override {
    return (t == 3 && agent == 1) ? std::numeric_limits<double>::infinity() : x[0] * x[0];
  }
  std::string name() const override { return "nan_at_time"; }

 private:
  std::size_t n_;
};

Simulation consensus_sim(const Digraph& g, double delta, std::size_t horizon, const FeasibleSet& domain) {
  Simulation sim;
  sim.weights = equal_neighbor_weights(g);
  sim.delta = delta;
  sim.stream = std::make_shared<ConstantStream>(g.size(), domain.dim());
  sim.oracle = OracleConfig::uniform(g.size(), 1e-4, DirectionLaw::kGaussian, 1);
  sim.domain = domain;
  sim.horizon = horizon;
  sim.init_seed = 3;
  return sim;
}

Simulation paper_sim(std::size_t horizon, std::uint64_t seed) {
  const Digraph g = make_random_strongly_connected(10, 0.3, 7);
  Simulation sim;
  sim.weights = equal_neighbor_weights(g);
  sim.delta = 0.1;
  sim.schedule = StepSchedule::inv_sqrt(1.0);
  sim.stream = std::make_shared<PaperQuadraticStream>(10, seed);
  sim.oracle = OracleConfig::uniform(10, 1e-4, DirectionLaw::kGaussian, seed);
  sim.domain = FeasibleSet::interval(-5.0, 5.0, 1);
  sim.horizon = horizon;
  sim.init_seed = seed;
  return sim;
}

Vector stacked(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  Vector phi(x.rows() + y.rows());
  phi << x.col(0), y.col(0);
  return phi;
}

}  // namespace

TEST_CASE("projection examples") {
  const FeasibleSet box = FeasibleSet::interval(-5.0, 5.0, 1);
  CHECK(box.project(Vector::Constant(1, 7.0))[0] == 5.0);
  CHECK(box.project(Vector::Constant(1, 3.0))[0] == 3.0);
  CHECK(box.project(Vector::Constant(1, -9.0))[0] == -5.0);
  const FeasibleSet ball = FeasibleSet::ball(Vector::Zero(2), 1.0);
  Vector v(2);
  v << 3.0, 4.0;
  const Vector p = ball.project(v);
  CHECK(p[0] == doctest::Approx(0.6));
  CHECK(p[1] == doctest::Approx(0.8));
  CHECK_THROWS_AS(box.project(Vector::Zero(2)), ValidationError);
  CHECK(box.radius_bound() == 5.0);
  CHECK(FeasibleSet::interval(-1.0, 2.0, 2).radius_bound() == doctest::Approx(std::sqrt(8.0)));
  CHECK(FeasibleSet::ball(Vector::Constant(1, 1.0), 2.0).radius_bound() == 3.0);
  CHECK_THROWS_AS(FeasibleSet::interval(1.0, -1.0, 1), ValidationError);
  CHECK_THROWS_AS(FeasibleSet::ball(Vector::Zero(2), -1.0), ValidationError);
}

TEST_CASE("projection is non-expansive, idempotent and lands in the set") {
  std::mt19937_64 eng(77);
  std::normal_distribution<double> normal(0.0, 4.0);
  Vector lo(3), hi(3);
  lo << -1.0, -2.0, 0.0;
  hi << 1.0, 3.0, 0.5;
  Vector c(3);
  c << 0.5, -0.5, 1.0;
  const FeasibleSet sets[] = {FeasibleSet::box(lo, hi), FeasibleSet::ball(c, 1.5)};
  for (const FeasibleSet& s : sets) {
    for (int k = 0; k < 1000; ++k) {
      Vector u(3), v(3);
      for (int j = 0; j < 3; ++j) u[j] = normal(eng), v[j] = normal(eng);
      const Vector pu = s.project(u), pv = s.project(v);
      CHECK((pu - pv).norm() <= (u - v).norm() + 1e-12);
      CHECK((s.project(pu) - pu).norm() <= 1e-12);
      CHECK(s.contains(pu, 1e-12));
      Engine e2(static_cast<std::uint64_t>(k));
      CHECK(s.contains(s.sample(e2)));
    }
  }
}

TEST_CASE("step schedules") {
  const StepSchedule s = StepSchedule::inv_sqrt(2.0);
  CHECK(s(0) == 2.0);
  CHECK(s(3) == doctest::Approx(1.0));
  CHECK(s.initial() == 2.0);
  CHECK(StepSchedule::constant(0.3)(1000) == 0.3);
  const StepSchedule tbl = StepSchedule::table({0.5, 0.4, 0.4, 0.1});
  CHECK(tbl(1) == 0.4);
  CHECK(tbl(100) == 0.1);
  CHECK_THROWS_AS(StepSchedule::table({0.1, 0.2}), ValidationError);
  CHECK_THROWS_AS(StepSchedule::table({}), ValidationError);
  CHECK_THROWS_AS(StepSchedule::inv_sqrt(0.0), ValidationError);
  CHECK_THROWS_AS(StepSchedule::constant(-1.0), ValidationError);
  CHECK(s.describe() == "inv_sqrt(gamma0=2)");
}

TEST_CASE("network state helpers") {
  std::vector<AgentState> agents{{Vector::Constant(2, 1.0), Vector::Constant(2, 0.5)},
                                 {Vector::Constant(2, 3.0), Vector::Constant(2, -0.5)}};
  const NetworkState s = NetworkState::from_agents(agents);
  CHECK(s.agents() == 2);
  CHECK(s.agent(1).x == agents[1].x);
  CHECK(augmented_mean(s) == Vector::Constant(2, 2.0));
  CHECK(consensus_spread(s.x) == doctest::Approx(std::sqrt(2.0)));

  const NetworkState init = initial_state(FeasibleSet::interval(-5.0, 5.0, 1), 6, 9);
  CHECK(init.y.isZero(0.0));
  CHECK((init.x.array().abs() <= 5.0).all());
  CHECK(init.x == initial_state(FeasibleSet::interval(-5.0, 5.0, 1), 6, 9).x);
}

TEST_CASE("consensus fixed point") {
  const Digraph g = make_random_strongly_connected(5, 0.3, 1);
  const WeightPair wp = equal_neighbor_weights(g);
  const ConstantStream c(5, 1);
  const OracleConfig cfg = OracleConfig::uniform(5, 1e-4, DirectionLaw::kGaussian, 1);
  const FeasibleSet box = FeasibleSet::interval(-5.0, 5.0, 1);
  NetworkState s{Eigen::MatrixXd::Constant(5, 1, 1.25), Eigen::MatrixXd::Zero(5, 1)};
  for (std::size_t t = 0; t < 20; ++t) s = step_all(s, wp, 0.1, 0.5, c, cfg, box, t).next;
  CHECK((s.x.array() - 1.25).abs().maxCoeff() < 1e-14);
  CHECK(s.y.cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("pure consensus follows powers of the augmented matrix") {
  const FeasibleSet wide = FeasibleSet::interval(-100.0, 100.0, 1);
  const Digraph g = make_random_strongly_connected(6, 0.3, 4);
  Simulation sim = consensus_sim(g, 0.1, 60, wide);
  sim.initial = NetworkState{Eigen::MatrixXd::Zero(6, 1), Eigen::MatrixXd::Zero(6, 1)};
  sim.initial->x.col(0) << -1.0, 0.5, 2.0, -0.25, 1.5, 0.0;
  const Trace tr = simulate(sim);
  const AugmentedMatrix am = build_augmented(sim.weights, 0.1);
  Vector phi = stacked(sim.initial->x, sim.initial->y);
  for (std::size_t t = 1; t <= 60; ++t) {
    phi = am.matrix * phi;
    CHECK((stacked(tr.x[t], tr.y[t]) - phi).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("pure consensus converges to the limit for delta below delta_hat") {
  const FeasibleSet wide = FeasibleSet::interval(-10.0, 10.0, 1);
  const Digraph g = make_complete(2);
  const WeightPair wp = equal_neighbor_weights(g);
  const double delta = 0.9 * delta_hat(wp);
  Simulation sim = consensus_sim(g, delta, 50000, wide);
  sim.record_internals = false;
  sim.initial = NetworkState{Eigen::MatrixXd::Zero(2, 1), Eigen::MatrixXd::Zero(2, 1)};
  sim.initial->x.col(0) << -1.0, 3.0;
  sim.initial->y.col(0) << 0.5, -0.25;
  const Trace tr = simulate(sim);
  const Vector limit = augmented_limit(2) * stacked(sim.initial->x, sim.initial->y);
  CHECK(limit[0] == doctest::Approx(1.125));
  CHECK((tr.x.back().col(0) - limit.head(2)).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(tr.spread.back() < 1e-9);
  CHECK(tr.spread.back() < tr.spread[0]);
}

TEST_CASE("theta residual identities") {
  const FeasibleSet wide = FeasibleSet::interval(-100.0, 100.0, 1);
  Simulation sim = paper_sim(50, 5);
  sim.domain = wide;
  sim.initial = initial_state(FeasibleSet::interval(-5.0, 5.0, 1), 10, 5);
  const Trace tr = simulate(sim);
  // Wherever the projection is inactive, theta is exactly the negative scaled oracle term.
  std::size_t interior = 0;
  for (std::size_t t = 0; t < 50; ++t) {
    for (Eigen::Index i = 0; i < tr.x[t + 1].rows(); ++i) {
      if (std::abs(tr.x[t + 1](i, 0)) >= 100.0) continue;
      ++interior;
      CHECK(std::abs(tr.theta[t](i, 0) + tr.gamma[t] * tr.oracle[t](i, 0)) < 1e-12);
    }
  }
  CHECK(interior > 250);

  const FeasibleSet box = FeasibleSet::interval(-5.0, 5.0, 1);
  Simulation cs = consensus_sim(make_cycle(4), 0.1, 10, box);
  const Trace ct = simulate(cs);
  for (std::size_t t = 0; t < 10; ++t) CHECK(ct.theta_total[t] < 1e-12);
}

TEST_CASE("conservation and per-agent residual bound with an active projection") {
  Simulation sim = paper_sim(400, 8);
  sim.domain = FeasibleSet::interval(-1.0, 0.5, 1);
  sim.schedule = StepSchedule::constant(0.8);
  sim.initial = initial_state(sim.domain, 10, 8);
  const Trace tr = simulate(sim);
  std::size_t clipped = 0;
  for (std::size_t t = 0; t < tr.horizon(); ++t) {
    const double before = tr.x[t].sum() + tr.y[t].sum();
    const double after = tr.x[t + 1].sum() + tr.y[t + 1].sum();
    CHECK(std::abs(after - before - tr.theta[t].sum()) < 1e-10);
    for (Eigen::Index i = 0; i < 10; ++i) {
      const double lhs = tr.theta[t].row(i).norm();
      const double rhs = tr.gamma[t] * tr.oracle[t].row(i).norm() + 2.0 * sim.delta * tr.y[t].row(i).norm();
      CHECK(lhs <= rhs + 1e-10);
      if (tr.x[t + 1](i, 0) == 0.5 || tr.x[t + 1](i, 0) == -1.0) ++clipped;
    }
  }
  CHECK(clipped > 0);
}

TEST_CASE("simulate contracts") {
  Simulation sim = paper_sim(0, 1);
  const Trace t0 = simulate(sim);
  CHECK(t0.x.size() == 1);
  CHECK(t0.horizon() == 0);
  CHECK(t0.theta.empty());

  sim.horizon = 200;
  const Trace a = simulate(sim), b = simulate(sim);
  for (std::size_t t = 0; t <= 200; ++t) {
    CHECK(a.x[t] == b.x[t]);
    CHECK(a.y[t] == b.y[t]);
  }
  CHECK(a.agents() == 10);
  CHECK(a.dim() == 1);
  CHECK(a.x_star.size() == 201);

  Simulation bad = sim;
  bad.stream = std::make_shared<ConstantStream>(9, 1);
  CHECK_THROWS_AS(simulate(bad), ValidationError);
  bad = sim;
  bad.stream = std::make_shared<ConstantStream>(10, 2);
  CHECK_THROWS_AS(simulate(bad), ValidationError);
  bad = sim;
  bad.delta = 0.0;
  CHECK_THROWS_AS(simulate(bad), ValidationError);
  bad = sim;
  bad.initial = NetworkState{Eigen::MatrixXd::Constant(10, 1, 9.0), Eigen::MatrixXd::Zero(10, 1)};
  CHECK_THROWS_AS(simulate(bad), ValidationError);
  bad = sim;
  bad.stream = nullptr;
  CHECK_THROWS_AS(simulate(bad), ValidationError);

  bad = sim;
  bad.stream = std::make_shared<NanAtTime>(10);
  try {
    simulate(bad);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    const std::string what = e.what();
    CHECK(what.find("agent 1") != std::string::npos);
    CHECK(what.find("t = 3") != std::string::npos);
  }
}

TEST_CASE("agents converge to a common curve tracking the drifting minimizer") {
  const Trace tr = simulate(paper_sim(3000, 20210));
  CHECK(tr.spread.back() < tr.spread[100]);
  CHECK(tr.spread.back() < 1e-2);
  const double d = PaperQuadraticStream::drift(3000);
  CHECK((tr.x.back().array() - d).abs().maxCoeff() < 0.01);
}
