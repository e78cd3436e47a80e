#include "rgf/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "rgf/errors.hpp"

namespace rgf {

double golden_section_minimize(const std::function<double(double)>& f, double lo, double hi, double tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  const double mid = 0.5 * (a + b);
  // The optimum may sit on the boundary of [lo, hi].
  double best = mid, best_f = f(mid);
  for (double cand : {lo, hi}) {
    double fv = f(cand);
    if (fv < best_f) best = cand, best_f = fv;
  }
  return best;
}

MinimizerSequence minimizer_sequence(const ObjectiveStream& stream, std::size_t horizon, const FeasibleSet* domain) {
  MinimizerSequence seq;
  seq.points.reserve(horizon + 1);
  if (stream.analytic_minimizer(0)) {
    seq.source = "analytic";
    for (std::size_t t = 0; t <= horizon; ++t) seq.points.push_back(*stream.analytic_minimizer(t));
    return seq;
  }
  constexpr double kTol = 1e-6;
  if (domain == nullptr || domain->dim() != 1 || stream.dim() != 1) {
    throw NumericalError("minimizer at t = 0: no analytic minimizer and the 1-D fallback does not apply");
  }
  const Vector lo_probe = Vector::Constant(1, -std::numeric_limits<double>::max());
  const Vector hi_probe = Vector::Constant(1, std::numeric_limits<double>::max());
  const double lo = domain->project(lo_probe)[0];
  const double hi = domain->project(hi_probe)[0];
  seq.source = fmt::format("golden_section(tol={})", kTol);
  for (std::size_t t = 0; t <= horizon; ++t) {
    const double x = golden_section_minimize(
        [&](double v) { return stream.global_cost(t, Vector::Constant(1, v)); }, lo, hi, kTol);
    if (!std::isfinite(x)) throw NumericalError(fmt::format("fallback minimizer failed at t = {}", t));
    seq.points.push_back(Vector::Constant(1, x));
  }
  return seq;
}

double path_length(std::span<const Vector> minimizers) {
  double total = 0.0;
  for (std::size_t t = 1; t < minimizers.size(); ++t) total += (minimizers[t] - minimizers[t - 1]).norm();
  return total;
}

double RegretLedger::mean_time_averaged(std::size_t t) const {
  double sum = 0.0;
  for (std::size_t i = 0; i < agents(); ++i) sum += time_averaged(i, t);
  return sum / static_cast<double>(agents());
}

RegretLedger dynamic_regret(const Trace& trace, const ObjectiveStream& stream, const FeasibleSet* domain) {
  if (trace.x.empty()) throw ValidationError("dynamic_regret on an empty trace");
  const std::size_t horizon = trace.horizon();
  const std::size_t n = trace.agents();

  RegretLedger ledger;
  ledger.minimizers = minimizer_sequence(stream, horizon, domain);
  ledger.cumulative_cost.assign(horizon + 1, std::vector<double>(n, 0.0));
  ledger.cumulative_offline.assign(horizon + 1, 0.0);
  std::vector<double> running(n, 0.0);
  double offline = 0.0;
  for (std::size_t t = 0; t <= horizon; ++t) {
    for (std::size_t i = 0; i < n; ++i) running[i] += trace.global_cost[t][i];
    offline += stream.global_cost(t, ledger.minimizers.points[t]);
    ledger.cumulative_cost[t] = running;
    ledger.cumulative_offline[t] = offline;
  }
  ledger.regret.resize(n);
  for (std::size_t i = 0; i < n; ++i) ledger.regret[i] = running[i] - offline;
  ledger.path_length = path_length(ledger.minimizers.points);
  ledger.path_length_convention = horizon == 0 ? std::string("no consecutive minimizer pairs (T = 0)")
                                               : fmt::format("sum over t = 0..{} of ||x*(t+1) - x*(t)||", horizon - 1);
  return ledger;
}

std::vector<double> windowed_regret(const Trace& trace, const ObjectiveStream& stream,
                                    std::span<const Vector> minimizers, std::size_t t_begin, std::size_t t_end) {
  if (t_end > trace.horizon() || t_begin > t_end || minimizers.size() <= t_end) {
    throw ValidationError(fmt::format("regret window [{}, {}] outside the trace", t_begin, t_end));
  }
  std::vector<double> r(trace.agents(), 0.0);
  for (std::size_t t = t_begin; t <= t_end; ++t) {
    const double opt = stream.global_cost(t, minimizers[t]);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] += trace.global_cost[t][i] - opt;
  }
  return r;
}

ConsensusCurve consensus_curve(const Trace& trace) {
  if (trace.x.empty()) throw ValidationError("consensus_curve on an empty trace");
  ConsensusCurve curve;
  curve.spread = trace.spread;
  curve.augmented_mean = trace.augmented_mean;
  curve.augmented_deviation.reserve(trace.x.size());
  for (std::size_t t = 0; t < trace.x.size(); ++t) {
    const Eigen::RowVectorXd phi_bar = trace.augmented_mean[t].transpose();
    curve.augmented_deviation.push_back((trace.x[t].rowwise() - phi_bar).rowwise().norm().maxCoeff());
  }
  return curve;
}

EmpiricalConstants estimate_constants(const Trace& trace, std::span<const Vector> minimizers, std::size_t t_lo) {
  if (trace.oracle.size() != trace.horizon()) {
    throw ValidationError("estimate_constants needs a trace recorded with internals");
  }
  if (minimizers.size() < trace.x.size()) throw ValidationError("estimate_constants needs x*(t) for every t");
  EmpiricalConstants k;
  double running = 0.0;
  k.running_max_ratio.reserve(trace.horizon());
  for (std::size_t t = 0; t < trace.horizon(); ++t) {
    const double ratio = trace.theta_total[t] / trace.gamma[t];
    const double oracle_sum = trace.oracle[t].rowwise().norm().sum();
    k.g1 = std::max(k.g1, ratio);
    k.g2 = std::max(k.g2, ratio * ratio);
    k.g3 = std::max(k.g3, oracle_sum * trace.theta_total[t] / trace.gamma[t]);
    if (t >= t_lo) running = std::max(running, ratio);
    k.running_max_ratio.push_back(running);
  }
  for (std::size_t t = 0; t < trace.x.size(); ++t) {
    k.nu_hat = std::max(k.nu_hat, 0.5 * (trace.augmented_mean[t] - minimizers[t]).squaredNorm());
  }
  return k;
}

RegretBound regret_bound_rhs(const RegretBoundParams& prm) {
  const std::pair<const char*, double> positives[] = {
      {"n_agents", prm.n_agents}, {"dim", prm.dim},       {"rho", prm.rho}, {"d_hat", prm.d_hat},
      {"mu_hat", prm.mu_hat},     {"gamma0", prm.gamma0}, {"c", prm.c},     {"horizon", prm.horizon}};
  for (const auto& [name, v] : positives) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError(fmt::format("{} must be positive, got {}", name, v));
  }
  const std::pair<const char*, double> nonnegatives[] = {
      {"g1", prm.g1}, {"g2", prm.g2}, {"g3", prm.g3}, {"nu_hat", prm.nu_hat}, {"path_length", prm.path_length},
      {"mu_min", prm.mu_min}};
  for (const auto& [name, v] : nonnegatives) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError(fmt::format("{} must be nonnegative, got {}", name, v));
  }
  if (!(prm.lambda > 0.0 && prm.lambda < 1.0)) {
    throw ValidationError(fmt::format("lambda must lie in (0, 1), got {}", prm.lambda));
  }

  const double n = prm.n_agents, p = prm.dim, rho = prm.rho, dh = prm.d_hat, g0 = prm.gamma0;
  const double mu_min = prm.mu_min > 0.0 ? prm.mu_min : prm.mu_hat;
  RegretBound b;
  b.c_hat = std::max(prm.c, 1.0);
  b.l_hat = std::sqrt(p) * dh / mu_min;
  const double ch = b.c_hat, lh = b.l_hat, gap = 1.0 - prm.lambda;
  const double root = std::sqrt(prm.horizon + 1.0);

  b.linear_term = (prm.horizon + 1.0) * std::sqrt(p) * n * prm.mu_hat * dh;
  b.c1 = g0 * (2 * n * rho * prm.g1 * ch + 4 * n * n * rho * rho * lh * ch + 2 * (p + 5) * n * n * rho * dh * ch) / gap;
  b.c2 = n * prm.nu_hat / g0 + g0 * (p + 4) * (p + 4) * n * dh * dh + 2 * g0 * prm.g2 * ch + 2 * g0 * prm.g3 * ch +
         g0 * (2 * prm.g2 * ch + 4 * n * rho * lh * prm.g1 * ch + 2 * (p + 5) * n * dh * prm.g1 * ch) / gap;
  b.path_term = 2 * n * rho * prm.path_length / g0 * root;
  b.sqrt_term = b.c2 * root;
  b.total = b.linear_term + b.c1 + b.path_term + b.sqrt_term;
  return b;
}

std::string_view to_string(DecayStatus s) {
  switch (s) {
    case DecayStatus::kGeometric:
      return "geometric";
    case DecayStatus::kMarginal:
      return "marginal";
    case DecayStatus::kDivergent:
      return "divergent";
    case DecayStatus::kFailed:
      return "failed";
  }
  return "failed";
}

std::vector<SpectralRow> spectral_report(const WeightPair& wp, std::span<const double> delta_grid,
                                         const SpectralOptions& opts) {
  std::vector<SpectralRow> rows;
  double dh = 0.0;
  std::string dh_error;
  try {
    dh = delta_hat(wp);
  } catch (const std::exception& e) {
    dh_error = e.what();
  }
  for (double delta : delta_grid) {
    SpectralRow row;
    row.delta = delta;
    row.delta_hat = dh;
    try {
      if (!dh_error.empty()) throw NumericalError(dh_error);
      if (!(delta > 0.0)) throw ValidationError(fmt::format("delta must be positive, got {}", delta));
      const AugmentedMatrix am = build_augmented(wp, delta);
      const auto moduli = augmented_spectrum(am);
      // Largest modulus apart from the Perron eigenvalue 1.
      row.subdominant_modulus = moduli[0] > 1.0 + 1e-9 ? moduli[0] : moduli[1];
      const auto gaps = gap_sequence(am, std::max(opts.t_residual, opts.t_hi + 1));
      row.fit = fit_geometric(gaps, opts.t_lo, opts.t_hi);
      row.max_ratio = max_gap_ratio(gaps, opts.t_lo, opts.t_hi);
      row.residual = gaps[opts.t_residual - 1];
      if (row.subdominant_modulus > 1.0 + 1e-9) {
        row.status = DecayStatus::kDivergent;
      } else if (row.subdominant_modulus < 1.0 - 1e-6) {
        row.status = DecayStatus::kGeometric;
      } else {
        row.status = DecayStatus::kMarginal;
      }
    } catch (const std::exception& e) {
      row.status = DecayStatus::kFailed;
      row.error = e.what();
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace rgf
