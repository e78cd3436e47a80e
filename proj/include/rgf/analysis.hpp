#pragma once

// Diagnostics over simulation traces: dynamic regret, minimizer path length,
// consensus curves, the regret-bound right-hand side and spectral reports.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rgf/algorithm.hpp"
#include "rgf/graph.hpp"
#include "rgf/oracle.hpp"

namespace rgf {

/// Golden-section search on [lo, hi] to `tol` in x. f must be unimodal.
double golden_section_minimize(const std::function<double(double)>& f, double lo, double hi, double tol);

struct MinimizerSequence {
  std::vector<Vector> points;  // x*(t), t = 0..T
  std::string source;          // "analytic" or "golden_section(tol=...)"
};

/// x*(t) from the stream when available; otherwise a 1-D golden-section
/// fallback over `domain` at tolerance 1e-6. Throws NumericalError (naming t)
/// when neither applies.
MinimizerSequence minimizer_sequence(const ObjectiveStream& stream, std::size_t horizon,
                                     const FeasibleSet* domain = nullptr);

/// Sum over consecutive pairs of ||x*(t+1) - x*(t)||; 0 for fewer than two points.
double path_length(std::span<const Vector> minimizers);

struct RegretLedger {
  std::vector<std::vector<double>> cumulative_cost;  // [t][i] = sum_{s<=t} f^s(x^i(s))
  std::vector<double> cumulative_offline;            // [t] = sum_{s<=t} f^s(x*(s))
  std::vector<double> regret;                        // R_i(T)
  MinimizerSequence minimizers;
  double path_length = 0.0;
  std::string path_length_convention;

  std::size_t horizon() const { return cumulative_offline.empty() ? 0 : cumulative_offline.size() - 1; }
  std::size_t agents() const { return regret.size(); }
  double regret_at(std::size_t agent, std::size_t t) const {
    return cumulative_cost[t][agent] - cumulative_offline[t];
  }
  /// R_i(t) / t, t >= 1.
  double time_averaged(std::size_t agent, std::size_t t) const {
    return regret_at(agent, t) / static_cast<double>(t);
  }
  /// (1/N) sum_i R_i(t) / t, t >= 1.
  double mean_time_averaged(std::size_t t) const;
};

RegretLedger dynamic_regret(const Trace& trace, const ObjectiveStream& stream, const FeasibleSet* domain = nullptr);

/// Direct sum over t in [t_begin, t_end] of f^t(x^i(t)) - f^t(x*(t)).
std::vector<double> windowed_regret(const Trace& trace, const ObjectiveStream& stream,
                                    std::span<const Vector> minimizers, std::size_t t_begin, std::size_t t_end);

struct ConsensusCurve {
  std::vector<double> spread;                 // max_i ||x_i(t) - mean_j x_j(t)||
  std::vector<double> augmented_deviation;    // max_i ||x_i(t) - phi_bar(t)||
  std::vector<Vector> augmented_mean;         // phi_bar(t) = (1/N) sum_{i<=2N} phi_i(t)
};

ConsensusCurve consensus_curve(const Trace& trace);

/// Stand-ins measured on a trace for the existential constants of the
/// regret analysis. Each is a maximum over the recorded horizon.
struct EmpiricalConstants {
  double g1 = 0.0;     // max_t Theta(t) / gamma(t)
  double g2 = 0.0;     // max_t Theta(t)^2 / gamma(t)^2
  double g3 = 0.0;     // max_t sum_i ||g_i(t)|| Theta(t) / gamma(t)
  double nu_hat = 0.0; // max_t 0.5 ||phi_bar(t) - x*(t)||^2
  /// max over s in [t_lo, t] of Theta(s) / gamma(s), for t = 0..T-1.
  std::vector<double> running_max_ratio;
};

/// Requires a trace recorded with internals and x*(t).
EmpiricalConstants estimate_constants(const Trace& trace, std::span<const Vector> minimizers, std::size_t t_lo = 0);

struct RegretBoundParams {
  double n_agents = 0;
  double dim = 0;
  double rho = 0;       // sup ||x|| over the feasible set
  double d_hat = 0;     // subgradient bound
  double mu_hat = 0;    // max_i mu_i
  double mu_min = 0;    // min_i mu_i (enters L-hat); defaults to mu_hat when 0
  double gamma0 = 0;
  double lambda = 0;    // fitted geometric rate, in (0, 1)
  double c = 0;         // fitted geometric constant
  double g1 = 0, g2 = 0, g3 = 0;
  double nu_hat = 0;
  double horizon = 0;   // T
  double path_length = 0;
};

struct RegretBound {
  double linear_term = 0;    // (T+1) sqrt(p) N mu_hat D_hat
  double c1 = 0;
  double c2 = 0;
  double path_term = 0;      // 2 N rho omega_T / gamma0 * sqrt(T+1)
  double sqrt_term = 0;      // c2 * sqrt(T+1)
  double l_hat = 0;          // sqrt(p) D_hat / mu_min
  double c_hat = 0;          // max(C, 1)
  double total = 0;
};

/// Right-hand side of the dynamic-regret bound for gamma(t) = gamma0/sqrt(t+1).
/// Throws ValidationError for nonpositive structural parameters, a negative
/// path length, or lambda outside (0, 1).
RegretBound regret_bound_rhs(const RegretBoundParams& params);

enum class DecayStatus { kGeometric, kMarginal, kDivergent, kFailed };
std::string_view to_string(DecayStatus s);

struct SpectralRow {
  double delta = 0;
  double delta_hat = 0;
  double subdominant_modulus = 0;  // second-largest |eigenvalue| of W(delta)
  GeometricFit fit;                // over [t_lo, t_hi]
  double max_ratio = 0;            // max gap(t+1)/gap(t) over [t_lo, t_hi]
  double residual = 0;             // gap(t_residual)
  DecayStatus status = DecayStatus::kFailed;
  std::string error;               // set when status == kFailed
};

struct SpectralOptions {
  std::size_t t_lo = 5;
  std::size_t t_hi = 200;
  std::size_t t_residual = 400;
};

/// One row per delta: fitted (C, lambda), delta_hat, and whether W(delta)^t
/// approaches its limit geometrically (status from the subdominant eigenvalue;
/// kMarginal when it is within 1e-6 of 1). Row-level failures are captured
/// in the row instead of thrown.
std::vector<SpectralRow> spectral_report(const WeightPair& wp, std::span<const double> delta_grid,
                                         const SpectralOptions& opts = {});

}  // namespace rgf
