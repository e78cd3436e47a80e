#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>

#include "rgf/errors.hpp"
#include "rgf/oracle.hpp"
#include "rgf/smoothing_checks.hpp"

using namespace rgf;

namespace {

// f(x) = value for x[0] != bad, NaN at bad.
class PoisonedStream final : public ObjectiveStream {
 public:
  std::size_t n_agents() const override { return 1; }
  std::size_t dim() const override { return 1; }
  double eval(std::size_t, std::size_t, const Vector& x) const override {
    return x[0] > 1.0 ? std::numeric_limits<double>::quiet_NaN() : x[0];
  }
  std::string name() const override { return "poisoned"; }
};

class CountingStream final : public ObjectiveStream {
 public:
  std::size_t n_agents() const override { return 1; }
  std::size_t dim() const override { return 2; }
  double eval(std::size_t, std::size_t, const Vector& x) const override {
    ++calls;
    return x.squaredNorm();
  }
  std::string name() const override { return "counting"; }
  mutable int calls = 0;
};

}  // namespace

TEST_CASE("seed derivation is deterministic and separates streams") {
  CHECK(derive_seed(5, {1, 2, 3}) == derive_seed(5, {1, 2, 3}));
  CHECK(derive_seed(5, {1, 2, 3}) != derive_seed(5, {1, 3, 2}));
  CHECK(derive_seed(5, {1}) != derive_seed(6, {1}));
  const RngStream r(99);
  Engine a = r.engine(StreamTag::kDirection, 0, 0), b = r.engine(StreamTag::kDirection, 0, 1);
  CHECK(a() != b());
}

TEST_CASE("sample_direction laws") {
  OracleConfig cfg = OracleConfig::uniform(3, 1e-4, DirectionLaw::kUniformSphere, 17);
  for (std::size_t t = 0; t < 200; ++t) {
    CHECK(std::abs(sample_direction(cfg, 1, t, 4).norm() - 1.0) < 1e-12);
  }
  cfg.law = DirectionLaw::kGaussian;
  CHECK(sample_direction(cfg, 2, 9, 3) == sample_direction(cfg, 2, 9, 3));
  CHECK(sample_direction(cfg, 2, 9, 3) != sample_direction(cfg, 1, 9, 3));

  constexpr std::size_t n = 100000;
  Vector mean = Vector::Zero(3);
  for (std::size_t t = 0; t < n; ++t) mean += sample_direction(cfg, 0, t, 3);
  mean /= static_cast<double>(n);
  CHECK(mean.cwiseAbs().maxCoeff() < 0.02);

  CHECK(direction_law_from_string("uniform_sphere") == DirectionLaw::kUniformSphere);
  CHECK(to_string(DirectionLaw::kGaussian) == "gaussian");
  CHECK_THROWS_AS(direction_law_from_string("cauchy"), ValidationError);
}

TEST_CASE("oracle config validation") {
  CHECK_THROWS_AS(OracleConfig::uniform(3, 0.0, DirectionLaw::kGaussian, 1).validate(3), ValidationError);
  CHECK_THROWS_AS(OracleConfig::uniform(3, 1e-3, DirectionLaw::kGaussian, 1).validate(4), ValidationError);
  OracleConfig cfg{{1e-3, 2e-3, 5e-4}, DirectionLaw::kGaussian, 1};
  CHECK_NOTHROW(cfg.validate(3));
  CHECK(cfg.mu_hat() == 2e-3);
}

TEST_CASE("oracle on a linear stream is exact per draw and unbiased on average") {
  Vector d(3);
  d << 0.5, -1.0, 2.0;
  const LinearProbeStream s({d});
  const OracleConfig cfg = OracleConfig::uniform(1, 1e-4, DirectionLaw::kGaussian, 4);
  const Vector x = Vector::Constant(3, 0.3);
  constexpr std::size_t n = 100000;
  Vector mean = Vector::Zero(3), sq = Vector::Zero(3);
  for (std::size_t t = 0; t < n; ++t) {
    const OracleSample o = gradient_free_oracle_sample(s, cfg, 0, t, x);
    const Vector expect = d.dot(o.direction) * o.direction;
    CHECK((o.gradient - expect).cwiseAbs().maxCoeff() < 1e-9 * (1.0 + expect.norm()));
    mean += o.gradient;
    sq += o.gradient.cwiseProduct(o.gradient);
  }
  mean /= static_cast<double>(n);
  const Vector se = ((sq / static_cast<double>(n) - mean.cwiseProduct(mean)) / static_cast<double>(n)).cwiseSqrt();
  for (Eigen::Index k = 0; k < 3; ++k) CHECK(std::abs(mean[k] - d[k]) <= 3.0 * se[k]);
}

TEST_CASE("oracle special cases") {
  const ConstantStream c(2, 3, 7.0);
  const OracleConfig cfg = OracleConfig::uniform(2, 1e-4, DirectionLaw::kGaussian, 8);
  for (std::size_t t = 0; t < 50; ++t) CHECK(gradient_free_oracle(c, cfg, 1, t, Vector::Ones(3)).isZero(0.0));

  // At the origin of ||x||^2 the quotient is mu ||xi||^2 xi.
  const SquaredNormStream sq(2, Vector::Zero(3));
  for (std::size_t t = 0; t < 50; ++t) {
    const OracleSample o = gradient_free_oracle_sample(sq, cfg, 0, t, Vector::Zero(3));
    const double xi2 = o.direction.squaredNorm();
    CHECK((o.gradient - 1e-4 * xi2 * o.direction).norm() < 1e-15);
    CHECK(o.gradient.norm() <= 1e-4 * std::pow(o.direction.norm(), 3) * (1 + 1e-12));
  }

  CountingStream counting;
  const OracleConfig one = OracleConfig::uniform(1, 1e-3, DirectionLaw::kGaussian, 3);
  gradient_free_oracle(counting, one, 0, 5, Vector::Ones(2));
  CHECK(counting.calls == 2);

  const OracleConfig big = OracleConfig::uniform(1, 10.0, DirectionLaw::kUniformSphere, 3);
  CHECK_THROWS_AS(gradient_free_oracle(PoisonedStream(), big, 0, 0, Vector::Constant(1, 0.5)), NumericalError);
}

TEST_CASE("paper quadratic stream") {
  const PaperQuadraticStream s(10, 42);
  const double n = 10.0;
  CHECK(std::accumulate(s.a().begin(), s.a().end(), 0.0) == doctest::Approx(n).epsilon(1e-14));
  CHECK(std::accumulate(s.b().begin(), s.b().end(), 0.0) == doctest::Approx(n).epsilon(1e-14));
  CHECK(std::accumulate(s.c().begin(), s.c().end(), 0.0) == doctest::Approx(n).epsilon(1e-14));
  for (double a : s.a()) CHECK(a > 0.0);
  CHECK(PaperQuadraticStream::drift(0) == 0.016);
  CHECK(PaperQuadraticStream::drift(1) == doctest::Approx(2.0 * std::sin(0.008)));
  CHECK(PaperQuadraticStream::drift(500) == doctest::Approx(2.0 * std::sin(4.0) / 500.0));

  // Brute-force grid minimization of the aggregate at 1e-4 resolution.
  for (std::size_t t : {0u, 100u, 1000u}) {
    double best = 0.0, best_f = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= 100000; ++k) {
      const double x = -5.0 + 1e-4 * k;
      const double f = s.global_cost(t, Vector::Constant(1, x));
      if (f < best_f) best = x, best_f = f;
    }
    CHECK(std::abs(best - (*s.analytic_minimizer(t))[0]) <= 1e-4);
    // Aggregate is N (x - d)^2.
    const double x = 1.7, d = PaperQuadraticStream::drift(t);
    CHECK(s.global_cost(t, Vector::Constant(1, x)) == doctest::Approx(n * (x - d) * (x - d)).epsilon(1e-12));
  }
  CHECK(*s.subgradient_bound() > 0.0);

  CHECK(PaperQuadraticStream(10, 42).a() == s.a());
  CHECK(PaperQuadraticStream(10, 43).a() != s.a());
}

TEST_CASE("stream registry") {
  StreamSpec spec;
  spec.n_agents = 4;
  CHECK(make_stream(spec)->name() == "paper_quadratic");
  spec.dim = 2;
  CHECK_THROWS_AS(make_stream(spec), ValidationError);
  spec.name = "linear_probe";
  const auto lp = make_stream(spec);
  CHECK(lp->dim() == 2);
  CHECK(lp->n_agents() == 4);
  spec.name = "constant";
  CHECK(make_stream(spec)->eval(0, 0, Vector::Ones(2)) == 0.0);
  spec.name = "nope";
  CHECK_THROWS_AS(make_stream(spec), ValidationError);
  CHECK(stream_names().size() == 3);
}

TEST_CASE("smoothed value Monte Carlo") {
  const ScaledNormStream lip(1, 2.0, Vector::Constant(2, 0.1));
  const Vector x = Vector::Constant(2, 0.7);
  const MonteCarloEstimate tiny = smoothed_value_mc(lip, 0, 0, x, 1e-12, 1000, 5);
  CHECK(std::abs(tiny.mean - lip.eval(0, 0, x)) < 1e-6);

  const SquaredNormStream sq(1, Vector::Zero(2));
  const double mu = 0.3;
  const MonteCarloEstimate est = smoothed_value_mc(sq, 0, 0, x, mu, 100000, 6);
  CHECK(std::abs(est.mean - (x.squaredNorm() + mu * mu * 2.0)) <= 3.0 * est.std_error);
  CHECK(est.std_error > 0.0);

  const auto a = smoothed_value_mc(sq, 0, 0, x, mu, 1000, 9), b = smoothed_value_mc(sq, 0, 0, x, mu, 1000, 9);
  CHECK(a.mean == b.mean);
}

TEST_CASE("smoothing property checks") {
  const ScaledNormStream lip(1, 2.0, Vector::Constant(1, 0.3));
  std::vector<Vector> pts;
  for (int k = 0; k < 20; ++k) pts.push_back(Vector::Constant(1, -4.75 + 0.5 * k));
  const auto rows = sandwich_table(lip, pts, 0.5, 20000, 1);
  REQUIRE(rows.size() == 20);
  for (const auto& r : rows) CHECK(r.within);
  // Near the kink smoothing lifts the value noticeably.
  CHECK(rows[10].smoothed > rows[10].f + 0.1);

  const SquaredNormStream sq(1, Vector::Zero(3));
  Vector x(3);
  x << 0.4, -1.2, 0.9;
  const auto u = unbiasedness_check(sq, x, 0.1, 20000, 11, 12);
  CHECK(u.within);
  CHECK((u.fd_gradient - 2.0 * x).cwiseAbs().maxCoeff() < 0.01);

  const ScaledNormStream s5(1, 1.5, Vector::Zero(5));
  const auto m = second_moment_check(s5, Vector::Ones(5), 0.1, 20000, 13);
  CHECK(m.within);
  CHECK(m.ceiling == doctest::Approx(81.0 * 2.25));
  CHECK_THROWS_AS(sandwich_table(sq, pts, 0.1, 10, 1), ValidationError);
}
