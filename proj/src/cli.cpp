#include "rgf/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "rgf/errors.hpp"
#include "rgf/experiments.hpp"

namespace rgf {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kDefaultSeed = 20210;

std::optional<std::uint64_t> env_seed() {
  const char* raw = std::getenv("RGF_SEED");
  if (raw == nullptr || *raw == '\0') return std::nullopt;
  const std::string s(raw);
  if (s.find_first_not_of("0123456789") != std::string::npos) {
    throw ConfigError(fmt::format("RGF_SEED must be a nonnegative integer, got '{}'", s));
  }
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    throw ConfigError(fmt::format("RGF_SEED out of range: '{}'", s));
  }
}

// <base>/<experiment>/<UTC timestamp>, with -1, -2, ... appended on collision.
fs::path make_output_dir(const fs::path& base, const std::string& experiment) {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y%m%dT%H%M%SZ", &tm);
  const fs::path parent = base / experiment;
  fs::create_directories(parent);
  fs::path dir = parent / stamp;
  for (int k = 1; !fs::create_directory(dir); ++k) dir = parent / fmt::format("{}-{}", stamp, k);
  return dir;
}

json load_config_json(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream f(path);
  if (!f) throw ConfigError(fmt::format("cannot read config '{}'", path));
  json j;
  try {
    j = json::parse(f);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("config '{}' is not valid JSON: {}", path, e.what()));
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& o : overrides) apply_override(j, o);
  return j;
}

void apply_seed(json& j, std::optional<std::uint64_t> flag) {
  if (flag) {
    j["master_seed"] = *flag;
  } else if (!j.contains("master_seed")) {
    j["master_seed"] = env_seed().value_or(kDefaultSeed);
  }
}

json spectral_rows_json(const std::vector<SpectralRow>& rows) {
  json out = json::array();
  for (const auto& r : rows) {
    json row = {{"delta", r.delta},
                {"delta_hat", r.delta_hat},
                {"subdominant_modulus", r.subdominant_modulus},
                {"lambda", r.fit.lambda},
                {"intercept_c", r.fit.intercept_c},
                {"envelope_c", r.fit.envelope_c},
                {"r_squared", r.fit.r_squared},
                {"max_ratio", r.max_ratio},
                {"residual", r.residual},
                {"status", std::string(to_string(r.status))}};
    if (!r.error.empty()) row["error"] = r.error;
    out.push_back(row);
  }
  return out;
}

void report_error(std::ostream& err, const char* kind, const std::string& message) {
  err << json{{"error", {{"kind", kind}, {"message", message}}}}.dump() << '\n';
}

}  // namespace

int cli_run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Gradient-free distributed online optimization simulator", "rgf"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string out_base;

  auto* run_cmd = app.add_subcommand("run", "Execute one run from a JSON config");
  run_cmd->add_option("--config", config_path, "Config file")->required();
  run_cmd->add_option("--set", overrides, "Override a config key, e.g. --set graph.n=20");
  run_cmd->add_option("--seed", seed, "Master seed (default: config, then RGF_SEED)");
  run_cmd->add_option("--out", out_base, "Output root (default: config output_dir, then ./out)");

  std::string experiment;
  std::size_t horizon = 5000;
  std::string orientation = "cycle";
  std::vector<std::size_t> agent_counts{10, 50, 100, 200};
  std::size_t samples = 100000;
  auto* exp_cmd = app.add_subcommand("experiment", "Run a canned experiment");
  exp_cmd->add_option("name", experiment, "fig2_3 | fig4 | diagnostics")
      ->required()
      ->check(CLI::IsMember({"fig2_3", "fig4", "diagnostics"}));
  exp_cmd->add_option("--seed", seed, "Master seed (default: RGF_SEED, then 20210)");
  exp_cmd->add_option("--out", out_base, "Output root (default ./out)");
  exp_cmd->add_option("--horizon", horizon, "Horizon T")->check(CLI::PositiveNumber);
  exp_cmd->add_option("--orientation", orientation, "fig4 circle kind")
      ->check(CLI::IsMember({"cycle", "bidirectional_cycle"}));
  exp_cmd->add_option("--agents", agent_counts, "fig4 agent counts")->delimiter(',');
  exp_cmd->add_option("--samples", samples, "Monte Carlo samples for diagnostics")->check(CLI::PositiveNumber);

  GraphSpec graph;
  graph.kind = "cycle";
  std::vector<double> delta_grid{0.1};
  std::size_t t_lo = 5, t_hi = 200, t_residual = 400;
  auto* spec_cmd = app.add_subcommand("spectral", "Report delta_hat and W(delta) power decay");
  spec_cmd->add_option("--graph", graph.kind, "cycle | bidirectional_cycle | complete | random | edge_list");
  spec_cmd->add_option("--n", graph.n, "Number of agents");
  spec_cmd->add_option("--prob", graph.extra_edge_prob, "Extra-edge probability (random)");
  spec_cmd->add_option("--graph-seed", graph.seed, "Graph seed (random)");
  spec_cmd->add_option("--edge-list", graph.edge_list_path, "Edge-list file (edge_list)");
  spec_cmd->add_option("--delta-grid", delta_grid, "Comma-separated delta values")->delimiter(',');
  spec_cmd->add_option("--t-lo", t_lo, "Fit window start");
  spec_cmd->add_option("--t-hi", t_hi, "Fit window end");
  spec_cmd->add_option("--t-residual", t_residual, "Power at which the residual is reported");

  auto* diag_cmd = app.add_subcommand("diagnose", "Validate a config and report its spectral checks without running");
  diag_cmd->add_option("--config", config_path, "Config file")->required();
  diag_cmd->add_option("--set", overrides, "Override a config key");
  diag_cmd->add_option("--seed", seed, "Master seed");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    report_error(err, "usage", e.what());
    err << app.help();
    return kExitConfig;
  }

  try {
    if (run_cmd->parsed()) {
      json j = load_config_json(config_path, overrides);
      apply_seed(j, seed);
      const RunConfig cfg = run_config_from_json(j);
      const fs::path base = !out_base.empty() ? fs::path(out_base) : !cfg.output_dir.empty() ? fs::path(cfg.output_dir) : fs::path("out");
      const RunResult r = run(cfg);
      const fs::path dir = make_output_dir(base, "run");
      write_run_artifacts(r, dir);
      out << json{{"output_dir", dir.string()}, {"regret", r.ledger.regret}, {"warnings", r.warnings}}.dump(2) << '\n';
    } else if (exp_cmd->parsed()) {
      const std::uint64_t s = seed ? *seed : env_seed().value_or(kDefaultSeed);
      const fs::path dir = make_output_dir(out_base.empty() ? fs::path("out") : fs::path(out_base), experiment);
      json summary;
      if (experiment == "fig2_3") {
        const auto res = experiment_fig2_3(s, horizon, dir);
        summary = {{"regret", res.run.ledger.regret}, {"warnings", res.run.warnings}};
      } else if (experiment == "fig4") {
        Fig4Options opts;
        opts.agent_counts = agent_counts;
        opts.circle_kind = orientation;
        opts.horizon = horizon;
        summary = experiment_fig4(s, opts, dir).summary;
      } else {
        DiagnosticsOptions opts;
        opts.mc_samples = samples;
        opts.horizon = horizon;
        experiment_diagnostics(s, opts, dir);
        summary = {{"experiment", "diagnostics"}, {"seed", s}};
      }
      summary["output_dir"] = dir.string();
      out << summary.dump(2) << '\n';
    } else if (spec_cmd->parsed()) {
      RunConfig probe;
      probe.graph = graph;
      probe.horizon = 1;
      probe.validate();
      const WeightPair wp = equal_neighbor_weights(build_graph(graph));
      SpectralOptions opts;
      opts.t_lo = t_lo;
      opts.t_hi = t_hi;
      opts.t_residual = t_residual;
      if (t_lo < 1 || t_hi <= t_lo || t_residual < 1) throw ValidationError("need 1 <= t_lo < t_hi and t_residual >= 1");
      const auto rows = spectral_report(wp, delta_grid, opts);
      out << json{{"graph", graph.kind}, {"n_agents", wp.size()}, {"rows", spectral_rows_json(rows)}}.dump(2) << '\n';
    } else if (diag_cmd->parsed()) {
      json j = load_config_json(config_path, overrides);
      apply_seed(j, seed);
      const RunConfig cfg = run_config_from_json(j);
      cfg.validate();
      const WeightPair wp = equal_neighbor_weights(build_graph(cfg.graph));
      const double grid[] = {cfg.delta};
      const auto rows = spectral_report(wp, grid);
      json warnings = json::array();
      if (cfg.delta > rows.front().delta_hat) warnings.push_back("delta exceeds delta_hat");
      if (rows.front().status != DecayStatus::kGeometric) {
        warnings.push_back(fmt::format("W(delta) is {}", to_string(rows.front().status)));
      }
      out << json{{"config", to_json(cfg)}, {"spectral", spectral_rows_json(rows)}, {"warnings", warnings}}.dump(2)
          << '\n';
    }
  } catch (const ConfigError& e) {
    report_error(err, "config", e.what());
    return kExitConfig;
  } catch (const ValidationError& e) {
    report_error(err, "validation", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    report_error(err, "runtime", e.what());
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace rgf
