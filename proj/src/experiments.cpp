#include "rgf/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "rgf/errors.hpp"

namespace rgf {

using nlohmann::json;

namespace {

constexpr const char* kVersion = "rgf 1.0.0";

// ---- strict JSON readers -------------------------------------------------

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(fmt::format("'{}' must be an object", where));
  for (const auto& [key, _] : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw ConfigError(fmt::format("unknown key '{}{}'", where.empty() ? "" : where + ".", key));
    }
  }
}

std::string path_of(const std::string& where, const char* key) {
  return where.empty() ? std::string(key) : where + "." + key;
}

void read(const json& obj, const char* key, const std::string& where, double& out) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(fmt::format("'{}' must be a number", path_of(where, key)));
  out = v.get<double>();
}

void read(const json& obj, const char* key, const std::string& where, std::uint64_t& out) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  const bool ok = v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
  if (!ok) throw ConfigError(fmt::format("'{}' must be a nonnegative integer", path_of(where, key)));
  out = v.get<std::uint64_t>();
}

void read(const json& obj, const char* key, const std::string& where, std::string& out) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (!v.is_string()) throw ConfigError(fmt::format("'{}' must be a string", path_of(where, key)));
  out = v.get<std::string>();
}

void read(const json& obj, const char* key, const std::string& where, bool& out) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (!v.is_boolean()) throw ConfigError(fmt::format("'{}' must be a boolean", path_of(where, key)));
  out = v.get<bool>();
}

void read(const json& obj, const char* key, const std::string& where, std::vector<double>& out) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (!v.is_array()) throw ConfigError(fmt::format("'{}' must be an array of numbers", path_of(where, key)));
  out.clear();
  for (const json& e : v) {
    if (!e.is_number()) throw ConfigError(fmt::format("'{}' must be an array of numbers", path_of(where, key)));
    out.push_back(e.get<double>());
  }
}

// ---- output helpers ------------------------------------------------------

std::string num(double v) { return fmt::format("{:.17g}", v); }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error(fmt::format("cannot open '{}' for writing", path.string()));
  f << text;
  if (!f) throw std::runtime_error(fmt::format("failed writing '{}'", path.string()));
}

json fit_json(const GeometricFit& f) {
  return {{"lambda", f.lambda}, {"intercept_c", f.intercept_c}, {"envelope_c", f.envelope_c}, {"r_squared", f.r_squared}};
}

json spectral_json(const SpectralRow& r) {
  json j = {{"delta", r.delta},
            {"delta_hat", r.delta_hat},
            {"subdominant_modulus", r.subdominant_modulus},
            {"max_ratio", r.max_ratio},
            {"residual", r.residual},
            {"status", std::string(to_string(r.status))},
            {"fit", fit_json(r.fit)}};
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

// Eigenvalue-only row, for sizes where the power fit is too expensive.
SpectralRow spectrum_only_row(const WeightPair& wp, double delta, double dh, std::size_t cap) {
  SpectralRow row;
  row.delta = delta;
  row.delta_hat = dh;
  try {
    const auto moduli = augmented_spectrum(build_augmented(wp, delta));
    row.subdominant_modulus = moduli[0] > 1.0 + 1e-9 ? moduli[0] : moduli[1];
    if (row.subdominant_modulus > 1.0 + 1e-9) {
      row.status = DecayStatus::kDivergent;
    } else if (row.subdominant_modulus < 1.0 - 1e-6) {
      row.status = DecayStatus::kGeometric;
    } else {
      row.status = DecayStatus::kMarginal;
    }
    row.error = fmt::format("power fit skipped for N > {}", cap);
  } catch (const std::exception& e) {
    row.status = DecayStatus::kFailed;
    row.error = e.what();
  }
  return row;
}

SpectralRow spectral_row(const WeightPair& wp, double delta, std::size_t cap) {
  if (wp.size() > cap) {
    double dh = 0.0;
    try {
      dh = delta_hat(wp);
    } catch (const std::exception&) {
    }
    return spectrum_only_row(wp, delta, dh, cap);
  }
  const double grid[] = {delta};
  return spectral_report(wp, grid).front();
}

}  // namespace

// ---- RunConfig -----------------------------------------------------------

void RunConfig::validate() const {
  static const char* kGraphKinds[] = {"cycle", "bidirectional_cycle", "complete", "random", "edge_list"};
  if (std::none_of(std::begin(kGraphKinds), std::end(kGraphKinds), [&](const char* k) { return graph.kind == k; })) {
    throw ValidationError(fmt::format("unknown graph kind '{}'", graph.kind));
  }
  if (graph.kind != "edge_list" && graph.n < 2) throw ValidationError("graph.n must be at least 2");
  if (graph.kind == "random" && !(graph.extra_edge_prob >= 0.0 && graph.extra_edge_prob <= 1.0)) {
    throw ValidationError("graph.extra_edge_prob must lie in [0, 1]");
  }
  if (graph.kind == "edge_list" && graph.edge_list_path.empty()) {
    throw ValidationError("graph.edge_list_path is required for kind edge_list");
  }
  if (weight_rule != "equal_neighbor") throw ValidationError(fmt::format("unknown weight rule '{}'", weight_rule));
  if (!(delta > 0.0) || !std::isfinite(delta)) throw ValidationError(fmt::format("delta must be positive, got {}", delta));
  if (!(mu > 0.0) || !std::isfinite(mu)) throw ValidationError(fmt::format("mu must be positive, got {}", mu));
  direction_law_from_string(direction_law);
  if (step.kind != "inv_sqrt" && step.kind != "constant" && step.kind != "table") {
    throw ValidationError(fmt::format("unknown step kind '{}'", step.kind));
  }
  if (domain.kind != "box" && domain.kind != "ball") {
    throw ValidationError(fmt::format("unknown domain kind '{}'", domain.kind));
  }
  if (stream.dim == 0) throw ValidationError("stream.dim must be at least 1");
  // Building the parts runs their own contract checks.
  build_schedule(step);
  build_domain(domain, stream.dim);
  const Digraph g = build_graph(graph);
  if (!is_strongly_connected(g)) throw ValidationError("graph is not strongly connected");
}

json to_json(const RunConfig& c) {
  json j;
  j["graph"] = {{"kind", c.graph.kind},
                {"n", c.graph.n},
                {"extra_edge_prob", c.graph.extra_edge_prob},
                {"seed", c.graph.seed},
                {"edge_list_path", c.graph.edge_list_path}};
  j["weight_rule"] = c.weight_rule;
  j["delta"] = c.delta;
  j["mu"] = c.mu;
  j["direction_law"] = c.direction_law;
  j["step"] = {{"kind", c.step.kind}, {"gamma0", c.step.gamma0}, {"table", c.step.table}};
  j["horizon"] = c.horizon;
  j["domain"] = {{"kind", c.domain.kind},
                 {"lo", c.domain.lo},
                 {"hi", c.domain.hi},
                 {"center", c.domain.center},
                 {"radius", c.domain.radius}};
  j["stream"] = {{"name", c.stream.name}, {"dim", c.stream.dim}};
  j["stream"]["coeff_seed"] = c.stream.coeff_seed ? json(*c.stream.coeff_seed) : json(nullptr);
  j["master_seed"] = c.master_seed;
  j["output_dir"] = c.output_dir;
  j["record_internals"] = c.record_internals;
  return j;
}

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  reject_unknown(j,
                 {"graph", "weight_rule", "delta", "mu", "direction_law", "step", "horizon", "domain", "stream",
                  "master_seed", "output_dir", "record_internals"},
                 "");
  if (j.contains("graph")) {
    const json& g = j.at("graph");
    reject_unknown(g, {"kind", "n", "extra_edge_prob", "seed", "edge_list_path"}, "graph");
    read(g, "kind", "graph", c.graph.kind);
    read(g, "n", "graph", c.graph.n);
    read(g, "extra_edge_prob", "graph", c.graph.extra_edge_prob);
    read(g, "seed", "graph", c.graph.seed);
    read(g, "edge_list_path", "graph", c.graph.edge_list_path);
  }
  read(j, "weight_rule", "", c.weight_rule);
  read(j, "delta", "", c.delta);
  read(j, "mu", "", c.mu);
  read(j, "direction_law", "", c.direction_law);
  if (j.contains("step")) {
    const json& s = j.at("step");
    reject_unknown(s, {"kind", "gamma0", "table"}, "step");
    read(s, "kind", "step", c.step.kind);
    read(s, "gamma0", "step", c.step.gamma0);
    read(s, "table", "step", c.step.table);
  }
  read(j, "horizon", "", c.horizon);
  if (j.contains("domain")) {
    const json& d = j.at("domain");
    reject_unknown(d, {"kind", "lo", "hi", "center", "radius"}, "domain");
    read(d, "kind", "domain", c.domain.kind);
    read(d, "lo", "domain", c.domain.lo);
    read(d, "hi", "domain", c.domain.hi);
    read(d, "center", "domain", c.domain.center);
    read(d, "radius", "domain", c.domain.radius);
  }
  if (j.contains("stream")) {
    const json& s = j.at("stream");
    reject_unknown(s, {"name", "dim", "coeff_seed"}, "stream");
    read(s, "name", "stream", c.stream.name);
    read(s, "dim", "stream", c.stream.dim);
    if (s.contains("coeff_seed") && !s.at("coeff_seed").is_null()) {
      std::uint64_t seed = 0;
      read(s, "coeff_seed", "stream", seed);
      c.stream.coeff_seed = seed;
    }
  }
  read(j, "master_seed", "", c.master_seed);
  read(j, "output_dir", "", c.output_dir);
  read(j, "record_internals", "", c.record_internals);
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError(fmt::format("cannot read config '{}'", path.string()));
  json j;
  try {
    j = json::parse(f);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("config '{}' is not valid JSON: {}", path.string(), e.what()));
  }
  return run_config_from_json(j);
}

void apply_override(json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError(fmt::format("override '{}' is not of the form key=value", assignment));
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  json* node = &config;
  std::stringstream parts(key);
  std::string part;
  std::vector<std::string> path;
  while (std::getline(parts, part, '.')) {
    if (part.empty()) throw ConfigError(fmt::format("override key '{}' has an empty component", key));
    path.push_back(part);
  }
  for (std::size_t k = 0; k + 1 < path.size(); ++k) {
    if (!node->is_object()) throw ConfigError(fmt::format("override key '{}' descends into a non-object", key));
    node = &(*node)[path[k]];
    if (node->is_null()) *node = json::object();
  }
  if (!node->is_object()) throw ConfigError(fmt::format("override key '{}' descends into a non-object", key));
  (*node)[path.back()] = std::move(value);
}

// ---- builders ------------------------------------------------------------

Digraph build_graph(const GraphSpec& spec) {
  if (spec.kind == "cycle") return make_cycle(spec.n);
  if (spec.kind == "bidirectional_cycle") return make_bidirectional_cycle(spec.n);
  if (spec.kind == "complete") return make_complete(spec.n);
  if (spec.kind == "random") return make_random_strongly_connected(spec.n, spec.extra_edge_prob, spec.seed);
  if (spec.kind == "edge_list") {
    std::ifstream f(spec.edge_list_path);
    if (!f) throw ConfigError(fmt::format("cannot read edge list '{}'", spec.edge_list_path));
    return read_edge_list(f);
  }
  throw ValidationError(fmt::format("unknown graph kind '{}'", spec.kind));
}

FeasibleSet build_domain(const DomainSpec& spec, std::size_t dim) {
  if (spec.kind == "box") return FeasibleSet::interval(spec.lo, spec.hi, dim);
  if (spec.kind == "ball") {
    Vector center = Vector::Zero(static_cast<Eigen::Index>(dim));
    if (!spec.center.empty()) {
      if (spec.center.size() != dim) throw ValidationError("domain.center must have stream.dim entries");
      center = Eigen::Map<const Vector>(spec.center.data(), static_cast<Eigen::Index>(dim));
    }
    return FeasibleSet::ball(center, spec.radius);
  }
  throw ValidationError(fmt::format("unknown domain kind '{}'", spec.kind));
}

StepSchedule build_schedule(const StepSpec& spec) {
  if (spec.kind == "inv_sqrt") return StepSchedule::inv_sqrt(spec.gamma0);
  if (spec.kind == "constant") return StepSchedule::constant(spec.gamma0);
  if (spec.kind == "table") return StepSchedule::table(spec.table);
  throw ValidationError(fmt::format("unknown step kind '{}'", spec.kind));
}

// ---- run -----------------------------------------------------------------

RunResult run(const RunConfig& cfg, std::size_t spectral_max_agents) {
  cfg.validate();
  Digraph graph = build_graph(cfg.graph);
  WeightPair wp = equal_neighbor_weights(graph);
  const std::size_t n = graph.size();
  FeasibleSet domain = build_domain(cfg.domain, cfg.stream.dim);

  StreamSpec ss;
  ss.name = cfg.stream.name;
  ss.n_agents = n;
  ss.dim = cfg.stream.dim;
  ss.coeff_seed = cfg.stream.coeff_seed.value_or(cfg.master_seed);
  ss.half_width = domain.radius_bound();
  std::shared_ptr<const ObjectiveStream> stream = make_stream(ss);

  Simulation sim;
  sim.weights = wp;
  sim.delta = cfg.delta;
  sim.schedule = build_schedule(cfg.step);
  sim.stream = stream;
  sim.oracle = OracleConfig::uniform(n, cfg.mu, direction_law_from_string(cfg.direction_law), cfg.master_seed);
  sim.domain = domain;
  sim.horizon = cfg.horizon;
  sim.init_seed = cfg.master_seed;
  sim.record_internals = cfg.record_internals;

  RunResult r{cfg, graph, wp, stream, domain, {}, {}, 0.0, std::nullopt, {}};
  r.trace = simulate(sim);
  r.ledger = dynamic_regret(r.trace, *stream, &r.domain);

  try {
    r.delta_hat = delta_hat(wp);
  } catch (const std::exception& e) {
    r.warnings.push_back(fmt::format("delta_hat unavailable: {}", e.what()));
  }
  r.spectral = spectral_row(wp, cfg.delta, spectral_max_agents);
  const SpectralRow& row = *r.spectral;
  if (cfg.delta > r.delta_hat) {
    r.warnings.push_back(fmt::format(
        "delta = {} exceeds delta_hat = {:.6g}; geometric convergence of W(delta) is not guaranteed a priori", cfg.delta,
        r.delta_hat));
  }
  if (row.status == DecayStatus::kGeometric && row.fit.lambda > 0.0 && row.fit.lambda < 1.0) {
    const double lam = row.fit.lambda;
    const double limit = (1.0 - lam) / (2.0 * std::sqrt(3.0) * static_cast<double>(n) * row.fit.envelope_c * lam);
    if (cfg.delta > limit) {
      r.warnings.push_back(fmt::format("delta = {} exceeds (1 - lambda) / (2 sqrt(3) N C lambda) = {:.6g}", cfg.delta,
                                       limit));
    }
  }
  if (row.status == DecayStatus::kDivergent || row.status == DecayStatus::kMarginal) {
    r.warnings.push_back(fmt::format("W(delta) is {} (subdominant |eigenvalue| = {:.6f}); consensus is not guaranteed",
                                     to_string(row.status), row.subdominant_modulus));
  } else if (row.status == DecayStatus::kFailed) {
    r.warnings.push_back(fmt::format("spectral check failed: {}", row.error));
  }
  return r;
}

RunBound regret_bound_for_run(const RunResult& r) {
  if (r.config.step.kind != "inv_sqrt") throw ValidationError("the regret bound assumes gamma(t) = gamma0 / sqrt(t + 1)");
  if (!r.spectral || r.spectral->status != DecayStatus::kGeometric) {
    throw ValidationError("the regret bound needs a geometric fit of W(delta)");
  }
  const auto d_hat = r.stream->subgradient_bound();
  if (!d_hat) throw ValidationError(fmt::format("stream '{}' has no subgradient bound", r.stream->name()));
  RunBound b;
  b.constants = estimate_constants(r.trace, r.ledger.minimizers.points);
  RegretBoundParams& prm = b.params;
  prm.n_agents = static_cast<double>(r.trace.agents());
  prm.dim = static_cast<double>(r.trace.dim());
  prm.rho = r.domain.radius_bound();
  prm.d_hat = *d_hat;
  prm.mu_hat = r.config.mu;
  prm.mu_min = r.config.mu;
  prm.gamma0 = r.config.step.gamma0;
  prm.lambda = r.spectral->fit.lambda;
  prm.c = r.spectral->fit.envelope_c;
  prm.g1 = b.constants.g1;
  prm.g2 = b.constants.g2;
  prm.g3 = b.constants.g3;
  prm.nu_hat = b.constants.nu_hat;
  prm.horizon = static_cast<double>(r.trace.horizon());
  prm.path_length = r.ledger.path_length;
  b.bound = regret_bound_rhs(prm);
  return b;
}

json RunResult::metadata() const {
  json m;
  m["version"] = kVersion;
  m["config"] = to_json(config);
  m["seeds"] = {{"master", config.master_seed},
                {"graph", config.graph.seed},
                {"coefficients", config.stream.coeff_seed.value_or(config.master_seed)},
                {"initial_state", config.master_seed},
                {"directions", config.master_seed}};
  m["agents"] = graph.size();
  json edges = json::array();
  for (const auto& [a, b] : graph.edges()) edges.push_back({a, b});
  m["edges"] = edges;
  m["stream"] = stream->name();
  if (auto d = stream->subgradient_bound()) m["d_hat"] = *d;
  m["rho"] = domain.radius_bound();
  m["delta_hat"] = delta_hat;
  if (spectral) m["spectral"] = spectral_json(*spectral);
  m["warnings"] = warnings;
  m["minimizer_source"] = ledger.minimizers.source;
  m["path_length"] = ledger.path_length;
  m["path_length_convention"] = ledger.path_length_convention;
  m["regret"] = ledger.regret;
  json notes = json::array();
  if (config.graph.kind == "random") {
    notes.push_back(fmt::format(
        "substitute topology: the reference network is not published; using a directed cycle plus random extra edges "
        "(p = {}, seed = {})",
        config.graph.extra_edge_prob, config.graph.seed));
  }
  notes.push_back(fmt::format("horizon T = {}; the reference experiment does not state its horizon", config.horizon));
  notes.push_back("regret is computed from one realized trajectory, not an expectation");
  m["notes"] = notes;
  return m;
}

void write_run_artifacts(const RunResult& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const Trace& tr = r.trace;
  const std::size_t n = tr.agents(), p = tr.dim(), T = tr.horizon();

  std::string out = "t,agent";
  for (std::size_t k = 0; k < p; ++k) out += fmt::format(",x{}", k);
  out += ",global_cost,spread";
  for (std::size_t k = 0; k < p; ++k) out += fmt::format(",x_star{}", k);
  out += '\n';
  const auto& xs = r.ledger.minimizers.points;
  for (std::size_t t = 0; t <= T; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      out += fmt::format("{},{}", t, i);
      for (std::size_t k = 0; k < p; ++k) out += "," + num(tr.x[t](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)));
      out += "," + num(tr.global_cost[t][i]) + "," + num(tr.spread[t]);
      for (std::size_t k = 0; k < p; ++k) out += "," + num(xs[t][static_cast<Eigen::Index>(k)]);
      out += '\n';
    }
  }
  write_text(dir / "trajectory.csv", out);

  out = "t,agent,cumulative_cost,cumulative_offline,regret,time_averaged_regret\n";
  for (std::size_t t = 0; t <= T; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      out += fmt::format("{},{},{},{},{},{}\n", t, i, num(r.ledger.cumulative_cost[t][i]),
                         num(r.ledger.cumulative_offline[t]), num(r.ledger.regret_at(i, t)),
                         t == 0 ? std::string() : num(r.ledger.time_averaged(i, t)));
    }
  }
  write_text(dir / "regret.csv", out);

  const ConsensusCurve curve = consensus_curve(tr);
  out = "t,spread,augmented_deviation";
  for (std::size_t k = 0; k < p; ++k) out += fmt::format(",augmented_mean{}", k);
  out += ",gamma,theta_total\n";
  for (std::size_t t = 0; t <= T; ++t) {
    out += fmt::format("{},{},{}", t, num(curve.spread[t]), num(curve.augmented_deviation[t]));
    for (std::size_t k = 0; k < p; ++k) out += "," + num(curve.augmented_mean[t][static_cast<Eigen::Index>(k)]);
    if (t < T) {
      out += "," + num(tr.gamma[t]) + "," + (t < tr.theta_total.size() ? num(tr.theta_total[t]) : std::string());
    } else {
      out += ",,";
    }
    out += '\n';
  }
  write_text(dir / "consensus.csv", out);

  write_text(dir / "metadata.json", r.metadata().dump(2) + "\n");
}

// ---- canned experiments --------------------------------------------------

RunConfig fig2_3_config(std::uint64_t seed, std::size_t horizon) {
  RunConfig c;
  c.graph = GraphSpec{"random", 10, 0.3, 7, ""};
  c.delta = 0.1;
  c.mu = 1e-4;
  c.step = StepSpec{"inv_sqrt", 1.0, {}};
  c.horizon = horizon;
  c.domain = DomainSpec{};
  c.stream = StreamConfig{};
  c.master_seed = seed;
  return c;
}

Fig23Result experiment_fig2_3(std::uint64_t seed, std::size_t horizon, const std::filesystem::path& out_dir) {
  Fig23Result res{run(fig2_3_config(seed, horizon))};
  if (!out_dir.empty()) write_run_artifacts(res.run, out_dir);
  return res;
}

Fig4Result experiment_fig4(std::uint64_t seed, const Fig4Options& opts, const std::filesystem::path& out_dir) {
  if (opts.agent_counts.empty()) throw ValidationError("fig4 needs at least one agent count");
  if (opts.circle_kind != "cycle" && opts.circle_kind != "bidirectional_cycle") {
    throw ValidationError(fmt::format("fig4 circle kind must be cycle or bidirectional_cycle, got '{}'", opts.circle_kind));
  }
  Fig4Result res;
  json series = json::array();
  for (std::size_t n : opts.agent_counts) {
    RunConfig c = fig2_3_config(seed, opts.horizon);
    c.graph = GraphSpec{opts.circle_kind, n, 0.0, 0, ""};
    c.record_internals = false;
    const RunResult r = run(c, 100);
    Fig4Series s;
    s.n_agents = n;
    s.delta_hat = r.delta_hat;
    s.spectral = *r.spectral;
    s.mean_time_averaged_regret.reserve(opts.horizon);
    for (std::size_t t = 1; t <= opts.horizon; ++t) s.mean_time_averaged_regret.push_back(r.ledger.mean_time_averaged(t));
    series.push_back({{"n_agents", n},
                      {"final_mean_time_averaged_regret", s.mean_time_averaged_regret.back()},
                      {"delta_hat", s.delta_hat},
                      {"spectral", spectral_json(s.spectral)},
                      {"warnings", r.warnings},
                      {"csv", fmt::format("fig4_N{}.csv", n)}});
    if (!out_dir.empty()) {
      std::filesystem::create_directories(out_dir);
      std::string out = "t,mean_time_averaged_regret\n";
      for (std::size_t t = 1; t <= opts.horizon; ++t) {
        out += fmt::format("{},{}\n", t, num(s.mean_time_averaged_regret[t - 1]));
      }
      write_text(out_dir / fmt::format("fig4_N{}.csv", n), out);
    }
    res.series.push_back(std::move(s));
  }
  res.summary = {{"version", kVersion},
                 {"experiment", "fig4"},
                 {"seed", seed},
                 {"circle_kind", opts.circle_kind},
                 {"horizon", opts.horizon},
                 {"base_config", to_json(fig2_3_config(seed, opts.horizon))},
                 {"seed_policy",
                  "one master seed for every N: coefficient, initial-state and direction substreams are keyed by "
                  "(seed, agent), so agents shared across sizes reuse their draws; coefficient families are redrawn "
                  "per N because their normalization depends on N"},
                 {"series", series},
                 {"notes", json::array({fmt::format("horizon T = {}; the reference experiment does not state its horizon",
                                                    opts.horizon)})}};
  if (!out_dir.empty()) write_text(out_dir / "summary.json", res.summary.dump(2) + "\n");
  return res;
}

DiagnosticsResult experiment_diagnostics(std::uint64_t seed, const DiagnosticsOptions& opts,
                                         const std::filesystem::path& out_dir) {
  DiagnosticsResult res;
  const RngStream rng(seed);
  Engine pts = rng.engine(StreamTag::kTestPoints);

  // Value sandwich on a 1-D Lipschitz convex stream.
  constexpr double kSandwichMu = 0.5;
  const ScaledNormStream lip(1, 2.0, Vector::Constant(1, 0.3));
  std::vector<Vector> grid;
  for (int k = 0; k < 20; ++k) grid.push_back(Vector::Constant(1, -4.75 + 0.5 * k));
  res.sandwich = sandwich_table(lip, grid, kSandwichMu, opts.mc_samples, derive_seed(seed, {1}));

  // Oracle unbiasedness on ||x||^2 in R^3.
  constexpr double kOracleMu = 0.1;
  const SquaredNormStream sq(1, Vector::Zero(3));
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  for (int k = 0; k < 5; ++k) {
    Vector x(3);
    for (Eigen::Index c = 0; c < 3; ++c) x[c] = unif(pts);
    res.unbiasedness.push_back(unbiasedness_check(sq, x, kOracleMu, opts.mc_samples, derive_seed(seed, {2, std::uint64_t(k)}),
                                                  derive_seed(seed, {3, std::uint64_t(k)})));
  }

  // Second-moment ceiling on D-Lipschitz streams.
  for (std::size_t p : {1u, 2u, 5u}) {
    const ScaledNormStream s(1, 1.5, Vector::Constant(static_cast<Eigen::Index>(p), 0.2));
    Vector x(static_cast<Eigen::Index>(p));
    for (Eigen::Index c = 0; c < x.size(); ++c) x[c] = unif(pts);
    res.second_moment.push_back(second_moment_check(s, x, kOracleMu, opts.mc_samples, derive_seed(seed, {4, p})));
  }

  // delta_hat and W(delta) behavior per topology.
  std::vector<std::pair<std::string, Digraph>> graphs;
  graphs.emplace_back("random(10, p=0.3, seed=7)", make_random_strongly_connected(10, 0.3, 7));
  for (std::size_t n : opts.cycle_sizes) graphs.emplace_back(fmt::format("cycle({})", n), make_cycle(n));
  graphs.emplace_back("bidirectional_cycle(10)", make_bidirectional_cycle(10));
  for (const auto& [name, g] : graphs) {
    const WeightPair wp = equal_neighbor_weights(g);
    TopologyReport rep;
    rep.name = name;
    rep.n_agents = g.size();
    rep.delta_hat = delta_hat(wp);
    std::vector<double> deltas{0.1};
    if (rep.delta_hat > 0.0) deltas.push_back(0.9 * rep.delta_hat);
    for (double d : deltas) rep.rows.push_back(spectral_row(wp, d, 100));
    res.topologies.push_back(std::move(rep));
  }

  // Theta(t)/gamma(t) on the tracking run.
  const RunResult tracking = run(fig2_3_config(seed, opts.horizon));
  const Trace& tr = tracking.trace;
  constexpr std::size_t kThetaFrom = 10;
  double running = 0.0;
  std::vector<double> running_max(tr.horizon(), 0.0);
  for (std::size_t t = 0; t < tr.horizon(); ++t) {
    if (t >= kThetaFrom) running = std::max(running, tr.theta_total[t] / tr.gamma[t]);
    running_max[t] = running;
  }
  if (tr.horizon() > kThetaFrom) {
    res.theta.max_ratio = running;
    res.theta.running_max_at_end = running_max.back();
    res.theta.running_max_at_decade = running_max[std::max(kThetaFrom, tr.horizon() / 10)];
  }

  json sandwich = json::array();
  for (const auto& r : res.sandwich) {
    sandwich.push_back({{"x", r.x[0]}, {"f", r.f}, {"smoothed", r.smoothed}, {"std_error", r.std_error},
                        {"upper", r.upper}, {"within", r.within}});
  }
  json unbiased = json::array();
  for (const auto& r : res.unbiasedness) {
    unbiased.push_back({{"x", vector_json(r.x)},
                        {"oracle_mean", vector_json(r.oracle_mean)},
                        {"oracle_std_error", vector_json(r.oracle_std_error)},
                        {"fd_gradient", vector_json(r.fd_gradient)},
                        {"max_z", r.max_z},
                        {"within", r.within}});
  }
  json moments = json::array();
  for (const auto& r : res.second_moment) {
    moments.push_back({{"dim", r.dim}, {"mean_sq_norm", r.mean_sq_norm}, {"ceiling", r.ceiling}, {"within", r.within}});
  }
  json topo = json::array();
  for (const auto& t : res.topologies) {
    json rows = json::array();
    for (const auto& r : t.rows) rows.push_back(spectral_json(r));
    topo.push_back({{"name", t.name}, {"n_agents", t.n_agents}, {"delta_hat", t.delta_hat}, {"rows", rows}});
  }
  res.summary = {{"version", kVersion},
                 {"experiment", "diagnostics"},
                 {"seed", seed},
                 {"mc_samples", opts.mc_samples},
                 {"sandwich", {{"stream", "2 |x - 0.3|"}, {"mu", kSandwichMu}, {"rows", sandwich}}},
                 {"unbiasedness", {{"stream", "||x||^2 in R^3"}, {"mu", kOracleMu}, {"z_limit", 4.0}, {"rows", unbiased}}},
                 {"second_moment", {{"stream", "1.5 ||x - 0.2||"}, {"mu", kOracleMu}, {"rows", moments}}},
                 {"topologies", topo},
                 {"theta_ratio",
                  {{"horizon", opts.horizon},
                   {"window_start", kThetaFrom},
                   {"max", res.theta.max_ratio},
                   {"running_max_at_decade", res.theta.running_max_at_decade},
                   {"running_max_at_end", res.theta.running_max_at_end}}}};

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::string out = "x,f,smoothed,std_error,upper,within\n";
    for (const auto& r : res.sandwich) {
      out += fmt::format("{},{},{},{},{},{}\n", num(r.x[0]), num(r.f), num(r.smoothed), num(r.std_error), num(r.upper),
                         r.within ? 1 : 0);
    }
    write_text(out_dir / "sandwich.csv", out);
    out = "topology,n_agents,delta,delta_hat,subdominant_modulus,lambda,envelope_c,r_squared,max_ratio,residual,status\n";
    for (const auto& t : res.topologies) {
      for (const auto& r : t.rows) {
        out += fmt::format("\"{}\",{},{},{},{},{},{},{},{},{},{}\n", t.name, t.n_agents, num(r.delta), num(r.delta_hat),
                           num(r.subdominant_modulus), num(r.fit.lambda), num(r.fit.envelope_c), num(r.fit.r_squared),
                           num(r.max_ratio), num(r.residual), to_string(r.status));
      }
    }
    write_text(out_dir / "spectral.csv", out);
    out = "t,theta_over_gamma,running_max\n";
    for (std::size_t t = 0; t < tr.horizon(); ++t) {
      out += fmt::format("{},{},{}\n", t, num(tr.theta_total[t] / tr.gamma[t]), num(running_max[t]));
    }
    write_text(out_dir / "theta_ratio.csv", out);
    write_text(out_dir / "diagnostics.json", res.summary.dump(2) + "\n");
  }
  return res;
}

}  // namespace rgf
