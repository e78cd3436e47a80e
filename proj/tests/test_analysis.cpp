#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>

#include "rgf/analysis.hpp"
#include "rgf/errors.hpp"

using namespace rgf;

namespace {

// Aggregate N (x - d(t))^2 with the minimizer hidden from the analysis.
class HiddenMinimizer final : public ObjectiveStream {
 public:
  std::size_t n_agents() const override { return 2; }
  std::size_t dim() const override { return 1; }
  double eval(std::size_t, std::size_t t, const Vector& x) const override {
    const double d = 0.5 * std::sin(0.1 * static_cast<double>(t));
    return (x[0] - d) * (x[0] - d);
  }
  std::string name() const override { return "hidden"; }
};

class Hidden2D final : public ObjectiveStream {
 public:
  std::size_t n_agents() const override { return 1; }
  std::size_t dim() const override { return 2; }
  double eval(std::size_t, std::size_t, const Vector& x) const override { return x.squaredNorm(); }
  std::string name() const override { return "hidden2d"; }
};

// Trace whose agents all play x*(t) + offset.
Trace scripted_trace(const ObjectiveStream& s, std::size_t horizon, double offset) {
  Trace tr;
  const auto n = static_cast<Eigen::Index>(s.n_agents());
  for (std::size_t t = 0; t <= horizon; ++t) {
    const double v = (*s.analytic_minimizer(t))[0] + offset;
    tr.x.push_back(Eigen::MatrixXd::Constant(n, 1, v));
    tr.y.push_back(Eigen::MatrixXd::Zero(n, 1));
    tr.global_cost.emplace_back(s.n_agents(), s.global_cost(t, Vector::Constant(1, v)));
    tr.spread.push_back(0.0);
    tr.augmented_mean.push_back(Vector::Constant(1, v));
  }
  return tr;
}

Simulation tracking_sim(std::size_t horizon) {
  Simulation sim;
  sim.weights = equal_neighbor_weights(make_random_strongly_connected(10, 0.3, 7));
  sim.delta = 0.1;
  sim.stream = std::make_shared<PaperQuadraticStream>(10, 20210);
  sim.oracle = OracleConfig::uniform(10, 1e-4, DirectionLaw::kGaussian, 20210);
  sim.horizon = horizon;
  sim.init_seed = 20210;
  return sim;
}

RegretBoundParams sample_params() {
  RegretBoundParams p;
  p.n_agents = 10;
  p.dim = 1;
  p.rho = 5;
  p.d_hat = 15;
  p.mu_hat = 1e-4;
  p.mu_min = 1e-4;
  p.gamma0 = 1;
  p.lambda = 0.92;
  p.c = 2.5;
  p.g1 = 16;
  p.g2 = 256;
  p.g3 = 300;
  p.nu_hat = 3;
  p.horizon = 5000;
  p.path_length = 0.03;
  return p;
}

}  // namespace

TEST_CASE("golden section search") {
  CHECK(golden_section_minimize([](double x) { return (x - 1.3) * (x - 1.3); }, -5, 5, 1e-9) ==
        doctest::Approx(1.3).epsilon(1e-8));
  CHECK(golden_section_minimize([](double x) { return x; }, -5, 5, 1e-9) == -5.0);
  CHECK(golden_section_minimize([](double x) { return -x; }, -5, 5, 1e-9) == 5.0);
}

TEST_CASE("minimizer sequences") {
  const PaperQuadraticStream s(4, 1);
  const MinimizerSequence a = minimizer_sequence(s, 10);
  CHECK(a.source == "analytic");
  CHECK(a.points.size() == 11);
  CHECK(a.points[0][0] == 0.016);

  const HiddenMinimizer h;
  const FeasibleSet box = FeasibleSet::interval(-5.0, 5.0, 1);
  const MinimizerSequence f = minimizer_sequence(h, 40, &box);
  CHECK(f.source.find("golden_section") == 0);
  for (std::size_t t = 0; t <= 40; ++t) CHECK(std::abs(f.points[t][0] - 0.5 * std::sin(0.1 * t)) < 1e-5);

  // The fallback respects the feasible set.
  const FeasibleSet narrow = FeasibleSet::interval(0.2, 1.0, 1);
  CHECK(minimizer_sequence(h, 50, &narrow).points[40][0] == doctest::Approx(0.2));

  CHECK_THROWS_AS(minimizer_sequence(h, 5), NumericalError);
  const Hidden2D h2;
  const FeasibleSet box2 = FeasibleSet::interval(-1.0, 1.0, 2);
  CHECK_THROWS_AS(minimizer_sequence(h2, 5, &box2), NumericalError);
}

TEST_CASE("path length") {
  std::vector<Vector> flat(5, Vector::Constant(2, 0.7));
  CHECK(path_length(flat) == 0.0);
  CHECK(path_length(std::vector<Vector>{}) == 0.0);
  std::vector<Vector> line;
  for (int t = 0; t <= 7; ++t) line.push_back(Vector::Constant(1, t / 7.0));
  CHECK(path_length(line) == doctest::Approx(1.0).epsilon(1e-14));

  // Re-timing: repeating a point adds nothing.
  std::vector<Vector> retimed = line;
  retimed.insert(retimed.begin() + 3, retimed[3]);
  CHECK(path_length(retimed) == path_length(line));
}

TEST_CASE("path length of the tracking stream matches an extended-precision sum") {
  const std::size_t horizon = 5000;
  const MinimizerSequence seq = minimizer_sequence(PaperQuadraticStream(10, 3), horizon);
  long double sum = 0.0L, comp = 0.0L;
  auto drift = [](std::size_t t) -> long double {
    if (t == 0) return 0.016L;
    return 2.0L * std::sin(0.008L * static_cast<long double>(t)) / static_cast<long double>(t);
  };
  for (std::size_t t = 0; t < horizon; ++t) {
    const long double term = std::fabs(drift(t + 1) - drift(t)) - comp;
    const long double next = sum + term;
    comp = (next - sum) - term;
    sum = next;
  }
  CHECK(path_length(seq.points) == doctest::Approx(static_cast<double>(sum)).epsilon(1e-12));
  CHECK(path_length(seq.points) > 0.0);
}

TEST_CASE("dynamic regret examples") {
  const PaperQuadraticStream s(10, 5);
  const Trace exact = scripted_trace(s, 100, 0.0);
  const RegretLedger zero = dynamic_regret(exact, s);
  for (double r : zero.regret) CHECK(std::abs(r) < 1e-12);

  const double eps = 0.01;
  const RegretLedger off = dynamic_regret(scripted_trace(s, 100, eps), s);
  for (double r : off.regret) CHECK(r == doctest::Approx(101.0 * 10.0 * eps * eps).epsilon(1e-9));
  CHECK(off.time_averaged(0, 100) == doctest::Approx(off.regret[0] / 100.0));
  CHECK(off.mean_time_averaged(50) == doctest::Approx(51.0 * 10.0 * eps * eps / 50.0).epsilon(1e-9));
  CHECK(off.horizon() == 100);
  CHECK(off.path_length == doctest::Approx(path_length(off.minimizers.points)));
  CHECK(off.path_length_convention.find("t = 0..99") != std::string::npos);
}

TEST_CASE("dynamic regret is additive over horizon splits") {
  Simulation sim = tracking_sim(600);
  const Trace tr = simulate(sim);
  const RegretLedger full = dynamic_regret(tr, *sim.stream);
  for (std::size_t split : {0u, 1u, 250u, 599u}) {
    const auto head = windowed_regret(tr, *sim.stream, full.minimizers.points, 0, split);
    const auto tail = windowed_regret(tr, *sim.stream, full.minimizers.points, split + 1, 600);
    for (std::size_t i = 0; i < 10; ++i) {
      CHECK(head[i] + tail[i] == doctest::Approx(full.regret[i]).epsilon(1e-12));
      CHECK(full.regret_at(i, split) == doctest::Approx(head[i]).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(windowed_regret(tr, *sim.stream, full.minimizers.points, 10, 601), ValidationError);
}

TEST_CASE("consensus curves") {
  const PaperQuadraticStream s(4, 5);
  const ConsensusCurve flat = consensus_curve(scripted_trace(s, 20, 0.3));
  for (double v : flat.spread) CHECK(v == 0.0);
  for (double v : flat.augmented_deviation) CHECK(v == doctest::Approx(0.0));

  // Pure consensus: the spread decays geometrically.
  Simulation sim = tracking_sim(400);
  sim.stream = std::make_shared<ConstantStream>(10, 1);
  sim.domain = FeasibleSet::interval(-50.0, 50.0, 1);
  sim.initial = initial_state(FeasibleSet::interval(-5.0, 5.0, 1), 10, 1);
  const ConsensusCurve curve = consensus_curve(simulate(sim));
  std::vector<double> shifted(curve.spread.begin() + 1, curve.spread.end());
  const GeometricFit fit = fit_geometric(shifted, 20, 200);
  CHECK(fit.lambda > 0.0);
  CHECK(fit.lambda < 1.0);
  CHECK(fit.r_squared > 0.95);
  CHECK(curve.spread[400] < 1e-8);
  // The augmented mean is conserved without an objective.
  CHECK(std::abs(curve.augmented_mean[400][0] - curve.augmented_mean[0][0]) < 1e-12);
  CHECK_THROWS_AS(consensus_curve(Trace{}), ValidationError);
}

TEST_CASE("empirical constants") {
  Simulation sim = tracking_sim(300);
  const Trace tr = simulate(sim);
  const RegretLedger led = dynamic_regret(tr, *sim.stream);
  const EmpiricalConstants k = estimate_constants(tr, led.minimizers.points, 10);
  CHECK(k.g1 > 0.0);
  CHECK(k.g2 == doctest::Approx(k.g1 * k.g1));
  CHECK(k.g3 > 0.0);
  CHECK(k.nu_hat > 0.0);
  CHECK(k.running_max_ratio.size() == 300);
  CHECK(k.running_max_ratio[5] == 0.0);
  CHECK(k.running_max_ratio.back() <= k.g1);

  sim.record_internals = false;
  CHECK_THROWS_AS(estimate_constants(simulate(sim), led.minimizers.points), ValidationError);
}

TEST_CASE("regret bound right-hand side") {
  RegretBoundParams p = sample_params();
  const RegretBound b = regret_bound_rhs(p);
  CHECK(b.total == doctest::Approx(b.linear_term + b.c1 + b.path_term + b.sqrt_term));
  CHECK(b.c_hat == 2.5);
  CHECK(b.l_hat == doctest::Approx(15.0 / 1e-4));
  CHECK(b.linear_term == doctest::Approx(5001.0 * 10.0 * 1e-4 * 15.0));

  // Term dropout.
  p.path_length = 0.0;
  p.mu_hat = 1e-300;
  const RegretBound d = regret_bound_rhs(p);
  CHECK(d.total == doctest::Approx(d.c1 + d.c2 * std::sqrt(5001.0)).epsilon(1e-12));

  // Linear in mu_hat when L-hat is held fixed.
  p = sample_params();
  const double lin = regret_bound_rhs(p).linear_term;
  p.mu_hat *= 2.0;
  CHECK(regret_bound_rhs(p).linear_term == doctest::Approx(2.0 * lin).epsilon(1e-15));

  // C below 1 is lifted to 1.
  p = sample_params();
  p.c = 0.3;
  CHECK(regret_bound_rhs(p).c_hat == 1.0);

  p = sample_params();
  p.rho = 0.0;
  CHECK_THROWS_AS(regret_bound_rhs(p), ValidationError);
  p = sample_params();
  p.lambda = 1.0;
  CHECK_THROWS_AS(regret_bound_rhs(p), ValidationError);
  p = sample_params();
  p.path_length = -1.0;
  CHECK_THROWS_AS(regret_bound_rhs(p), ValidationError);
}

TEST_CASE("spectral report") {
  const WeightPair cyc = equal_neighbor_weights(make_cycle(10));
  const double dh = delta_hat(cyc);
  const std::vector<double> grid{0.1, dh / 2.0, -1.0};
  const auto rows = spectral_report(cyc, grid);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].status == DecayStatus::kDivergent);
  CHECK(rows[0].subdominant_modulus > 1.0);
  CHECK(rows[0].delta_hat == dh);
  CHECK(rows[1].fit.lambda > 0.0);
  CHECK(rows[1].fit.lambda < 1.0);
  CHECK(rows[1].status == DecayStatus::kMarginal);
  CHECK(rows[2].status == DecayStatus::kFailed);
  CHECK_FALSE(rows[2].error.empty());

  const WeightPair rnd = equal_neighbor_weights(make_random_strongly_connected(10, 0.3, 7));
  const std::vector<double> g2{0.1};
  const auto r2 = spectral_report(rnd, g2);
  CHECK(r2[0].status == DecayStatus::kGeometric);
  CHECK(r2[0].residual < 1e-8);
  CHECK(r2[0].fit.r_squared > 0.98);
  CHECK(r2[0].fit.lambda == doctest::Approx(r2[0].subdominant_modulus).epsilon(1e-3));
  CHECK(r2[0].max_ratio <= 0.999);

  const WeightPair bi = equal_neighbor_weights(make_bidirectional_cycle(10));
  CHECK(spectral_report(bi, g2)[0].status == DecayStatus::kGeometric);

  CHECK(to_string(DecayStatus::kMarginal) == "marginal");
}
