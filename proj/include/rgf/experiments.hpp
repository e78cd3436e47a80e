#pragma once

// Run configurations, the config-driven run facade, and the canned
// experiments (tracking run, agent-count sweep, diagnostics bundle).

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rgf/algorithm.hpp"
#include "rgf/analysis.hpp"
#include "rgf/graph.hpp"
#include "rgf/oracle.hpp"
#include "rgf/smoothing_checks.hpp"

namespace rgf {

struct GraphSpec {
  std::string kind = "random";  // cycle | bidirectional_cycle | complete | random | edge_list
  std::size_t n = 10;
  double extra_edge_prob = 0.3;
  std::uint64_t seed = 7;
  std::string edge_list_path;  // kind == edge_list
};

struct DomainSpec {
  std::string kind = "box";  // box | ball
  double lo = -5.0;
  double hi = 5.0;
  std::vector<double> center;  // ball; defaults to the origin
  double radius = 5.0;
};

struct StepSpec {
  std::string kind = "inv_sqrt";  // inv_sqrt | constant | table
  double gamma0 = 1.0;
  std::vector<double> table;
};

struct StreamConfig {
  std::string name = "paper_quadratic";
  std::size_t dim = 1;
  std::optional<std::uint64_t> coeff_seed;  // defaults to master_seed
};

struct RunConfig {
  GraphSpec graph;
  std::string weight_rule = "equal_neighbor";
  double delta = 0.1;
  double mu = 1e-4;
  std::string direction_law = "gaussian";
  StepSpec step;
  std::size_t horizon = 5000;
  DomainSpec domain;
  StreamConfig stream;
  std::uint64_t master_seed = 20210;
  std::string output_dir;
  bool record_internals = true;

  /// Throws ValidationError on any contract violation (unknown kinds,
  /// nonpositive delta/mu, graph not strongly connected, ...).
  void validate() const;
};

nlohmann::json to_json(const RunConfig& cfg);
/// Missing keys take defaults; unknown keys and type mismatches throw ConfigError.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

/// Applies "a.b.c=value" to a JSON config. The value is parsed as JSON
/// when possible and taken as a string otherwise. Throws ConfigError.
void apply_override(nlohmann::json& config, const std::string& assignment);

Digraph build_graph(const GraphSpec& spec);
FeasibleSet build_domain(const DomainSpec& spec, std::size_t dim);
StepSchedule build_schedule(const StepSpec& spec);

struct RunResult {
  RunConfig config;
  Digraph graph;
  WeightPair weights;
  std::shared_ptr<const ObjectiveStream> stream;
  FeasibleSet domain;
  Trace trace;
  RegretLedger ledger;
  double delta_hat = 0.0;
  std::optional<SpectralRow> spectral;  // W(delta) diagnostics
  std::vector<std::string> warnings;

  nlohmann::json metadata() const;
};

/// Validates, builds every component, simulates and computes the regret
/// ledger. Warns (never aborts) when delta exceeds
/// min(delta_hat, (1 - lambda) / (2 sqrt(3) N C lambda)) or W(delta) is not
/// geometrically convergent. `spectral_max_agents` caps the size for which
/// the W(delta) power fit is computed.
RunResult run(const RunConfig& cfg, std::size_t spectral_max_agents = 200);

struct RunBound {
  RegretBoundParams params;
  EmpiricalConstants constants;  // trace-measured stand-ins for G1, G2, G3, nu-hat
  RegretBound bound;
};

/// Regret-bound right-hand side for a finished run, with (C, lambda) from
/// the W(delta) power fit and the existential constants replaced by their
/// trace maxima. Requires internals, a geometric fit and gamma(t) = gamma0/sqrt(t+1).
RunBound regret_bound_for_run(const RunResult& result);

/// trajectory.csv, regret.csv, consensus.csv, metadata.json in `dir`.
void write_run_artifacts(const RunResult& result, const std::filesystem::path& dir);

// Canned experiments. An empty `out_dir` skips writing files.

RunConfig fig2_3_config(std::uint64_t seed, std::size_t horizon = 5000);

struct Fig23Result {
  RunResult run;
};

Fig23Result experiment_fig2_3(std::uint64_t seed, std::size_t horizon = 5000,
                              const std::filesystem::path& out_dir = {});

struct Fig4Series {
  std::size_t n_agents = 0;
  std::vector<double> mean_time_averaged_regret;  // index t - 1, t = 1..T
  SpectralRow spectral;
  double delta_hat = 0.0;
};

struct Fig4Options {
  std::vector<std::size_t> agent_counts{10, 50, 100, 200};
  std::string circle_kind = "cycle";  // or bidirectional_cycle
  std::size_t horizon = 5000;
};

struct Fig4Result {
  std::vector<Fig4Series> series;
  nlohmann::json summary;
};

Fig4Result experiment_fig4(std::uint64_t seed, const Fig4Options& opts = {}, const std::filesystem::path& out_dir = {});

struct DiagnosticsOptions {
  std::size_t mc_samples = 100000;
  std::size_t horizon = 5000;
  std::vector<std::size_t> cycle_sizes{10, 50, 100, 200};
};

struct TopologyReport {
  std::string name;
  std::size_t n_agents = 0;
  double delta_hat = 0.0;
  std::vector<SpectralRow> rows;
};

struct ThetaStudy {
  double max_ratio = 0.0;              // max over t in [10, T) of Theta(t)/gamma(t)
  double running_max_at_decade = 0.0;  // running max at T/10
  double running_max_at_end = 0.0;
};

struct DiagnosticsResult {
  std::vector<SandwichRow> sandwich;
  std::vector<UnbiasednessRow> unbiasedness;
  std::vector<SecondMomentRow> second_moment;
  std::vector<TopologyReport> topologies;
  ThetaStudy theta;
  nlohmann::json summary;
};

DiagnosticsResult experiment_diagnostics(std::uint64_t seed, const DiagnosticsOptions& opts = {},
                                         const std::filesystem::path& out_dir = {});

}  // namespace rgf
