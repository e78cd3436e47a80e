#include "rgf/graph.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include <fmt/format.h>

#include "rgf/errors.hpp"
#include "rgf/rng.hpp"

namespace rgf {

Digraph::Digraph(std::size_t n, std::span<const Edge> edges) : in_(n), out_(n) {
  if (n == 0) throw ValidationError("digraph needs at least one node");
  for (std::size_t i = 0; i < n; ++i) {
    in_[i].push_back(i);
    out_[i].push_back(i);
  }
  for (const auto& [from, to] : edges) {
    if (from >= n || to >= n) {
      throw ValidationError(fmt::format("edge ({}, {}) out of range for N = {}", from, to, n));
    }
    if (from == to) continue;
    in_[to].push_back(from);
    out_[from].push_back(to);
  }
  for (auto* sets : {&in_, &out_}) {
    for (auto& s : *sets) {
      std::sort(s.begin(), s.end());
      s.erase(std::unique(s.begin(), s.end()), s.end());
    }
  }
}

bool Digraph::has_edge(std::size_t from, std::size_t to) const {
  const auto& s = out_.at(from);
  return std::binary_search(s.begin(), s.end(), to);
}

std::vector<Edge> Digraph::edges() const {
  std::vector<Edge> result;
  for (std::size_t i = 0; i < out_.size(); ++i) {
    for (std::size_t j : out_[i]) {
      if (j != i) result.emplace_back(i, j);
    }
  }
  return result;
}

namespace {

std::size_t count_reachable(std::size_t n, std::size_t start,
                            const std::vector<std::vector<std::size_t>>& adjacency) {
  std::vector<char> seen(n, 0);
  std::vector<std::size_t> stack{start};
  seen[start] = 1;
  std::size_t count = 1;
  while (!stack.empty()) {
    std::size_t v = stack.back();
    stack.pop_back();
    for (std::size_t w : adjacency[v]) {
      if (!seen[w]) {
        seen[w] = 1;
        ++count;
        stack.push_back(w);
      }
    }
  }
  return count;
}

void require_at_least_two(std::size_t n) {
  if (n < 2) throw ValidationError(fmt::format("topology needs n >= 2, got {}", n));
}

}  // namespace

bool is_strongly_connected(const Digraph& g) {
  const std::size_t n = g.size();
  std::vector<std::vector<std::size_t>> fwd(n), bwd(n);
  for (std::size_t i = 0; i < n; ++i) {
    fwd[i] = g.out_neighbors(i);
    bwd[i] = g.in_neighbors(i);
  }
  // Strongly connected iff node 0 reaches everyone and everyone reaches node 0.
  return count_reachable(n, 0, fwd) == n && count_reachable(n, 0, bwd) == n;
}

Digraph make_cycle(std::size_t n) {
  require_at_least_two(n);
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) edges.emplace_back(i, (i + 1) % n);
  return Digraph(n, edges);
}

Digraph make_bidirectional_cycle(std::size_t n) {
  require_at_least_two(n);
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    edges.emplace_back(i, (i + 1) % n);
    edges.emplace_back((i + 1) % n, i);
  }
  return Digraph(n, edges);
}

Digraph make_complete(std::size_t n) {
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) edges.emplace_back(i, j);
  return Digraph(n, edges);
}

Digraph make_random_strongly_connected(std::size_t n, double extra_edge_prob, std::uint64_t seed) {
  require_at_least_two(n);
  if (!(extra_edge_prob >= 0.0 && extra_edge_prob <= 1.0)) {
    throw ValidationError(fmt::format("extra_edge_prob must lie in [0, 1], got {}", extra_edge_prob));
  }
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) edges.emplace_back(i, (i + 1) % n);
  Engine eng = RngStream(seed).engine(StreamTag::kGraph);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j || j == (i + 1) % n) continue;
      // Draw for every candidate pair so the stream layout is independent of prob.
      if (unif(eng) < extra_edge_prob) edges.emplace_back(i, j);
    }
  }
  return Digraph(n, edges);
}

Digraph read_edge_list(std::istream& in) {
  std::string line;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
    }
    return false;
  };
  if (!next_line()) throw ConfigError("edge list: missing node count");
  long long n = -1;
  {
    std::istringstream ss(line);
    std::string rest;
    if (!(ss >> n) || (ss >> rest) || n <= 0) {
      throw ConfigError(fmt::format("edge list: bad node count line '{}'", line));
    }
  }
  std::vector<Edge> edges;
  while (next_line()) {
    std::istringstream ss(line);
    long long i = -1, j = -1;
    std::string rest;
    if (!(ss >> i >> j) || (ss >> rest) || i < 0 || j < 0 || i >= n || j >= n) {
      throw ConfigError(fmt::format("edge list: bad edge line '{}'", line));
    }
    edges.emplace_back(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  }
  return Digraph(static_cast<std::size_t>(n), edges);
}

void write_edge_list(std::ostream& out, const Digraph& g) {
  out << g.size() << '\n';
  for (const auto& [i, j] : g.edges()) out << i << ' ' << j << '\n';
}

WeightPair equal_neighbor_weights(const Digraph& g) {
  if (!is_strongly_connected(g)) throw ValidationError("graph is not strongly connected");
  const auto n = static_cast<Eigen::Index>(g.size());
  WeightPair wp{Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& in = g.in_neighbors(static_cast<std::size_t>(i));
    for (std::size_t j : in) wp.row(i, static_cast<Eigen::Index>(j)) = 1.0 / static_cast<double>(in.size());
    const auto& out = g.out_neighbors(static_cast<std::size_t>(i));
    for (std::size_t k : out) wp.col(static_cast<Eigen::Index>(k), i) = 1.0 / static_cast<double>(out.size());
  }
  return wp;
}

AugmentedMatrix build_augmented(const WeightPair& wp, double delta) {
  if (!std::isfinite(delta) || delta < 0.0) {
    throw ValidationError(fmt::format("delta must be finite and nonnegative, got {}", delta));
  }
  const Eigen::Index n = wp.row.rows();
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
  AugmentedMatrix am;
  am.delta = delta;
  am.matrix.resize(2 * n, 2 * n);
  am.matrix.topLeftCorner(n, n) = wp.row;
  am.matrix.topRightCorner(n, n) = delta * eye;
  am.matrix.bottomLeftCorner(n, n) = eye - wp.row;
  am.matrix.bottomRightCorner(n, n) = wp.col - delta * eye;
  return am;
}

Eigen::MatrixXd augmented_limit(std::size_t n_agents) {
  const auto n = static_cast<Eigen::Index>(n_agents);
  Eigen::MatrixXd limit = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  limit.topRows(n).setConstant(1.0 / static_cast<double>(n));
  return limit;
}

std::vector<double> augmented_spectrum(const AugmentedMatrix& am) {
  Eigen::EigenSolver<Eigen::MatrixXd> solver(am.matrix, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("eigenvalue computation for the augmented matrix did not converge");
  }
  std::vector<double> moduli;
  moduli.reserve(static_cast<std::size_t>(am.matrix.rows()));
  for (const std::complex<double>& ev : solver.eigenvalues()) moduli.push_back(std::abs(ev));
  std::sort(moduli.begin(), moduli.end(), std::greater<>());
  return moduli;
}

double delta_hat(const WeightPair& wp) {
  const std::size_t n = wp.size();
  if (n < 2) throw ValidationError("delta_hat needs at least two agents");
  const auto moduli = augmented_spectrum(build_augmented(wp, 0.0));
  const double base = (1.0 - moduli[2]) / (20.0 + 8.0 * static_cast<double>(n));
  return std::pow(base, static_cast<double>(n));
}

namespace {

double inf_norm(const Eigen::MatrixXd& m) { return m.cwiseAbs().rowwise().sum().maxCoeff(); }

}  // namespace

double matrix_power_gap(const AugmentedMatrix& am, std::size_t t) {
  if (t == 0) throw ValidationError("matrix_power_gap needs t >= 1");
  Eigen::MatrixXd result = Eigen::MatrixXd::Identity(am.matrix.rows(), am.matrix.cols());
  Eigen::MatrixXd base = am.matrix;
  for (std::size_t e = t; e > 0; e >>= 1) {
    if (e & 1U) result = result * base;
    if (e > 1) base = base * base;
  }
  return inf_norm(result - augmented_limit(am.agents()));
}

std::vector<double> gap_sequence(const AugmentedMatrix& am, std::size_t t_max) {
  const Eigen::MatrixXd limit = augmented_limit(am.agents());
  std::vector<double> gaps;
  gaps.reserve(t_max);
  Eigen::MatrixXd power = am.matrix;
  for (std::size_t t = 1; t <= t_max; ++t) {
    if (t > 1) power = power * am.matrix;
    gaps.push_back(inf_norm(power - limit));
  }
  return gaps;
}

GeometricFit fit_geometric(std::span<const double> gaps, std::size_t t_lo, std::size_t t_hi) {
  if (t_lo < 1 || t_hi < t_lo + 1 || t_hi > gaps.size()) {
    throw NumericalError(fmt::format("fit window [{}, {}] invalid for {} gaps", t_lo, t_hi, gaps.size()));
  }
  double st = 0, sy = 0, stt = 0, sty = 0;
  const auto m = static_cast<double>(t_hi - t_lo + 1);
  for (std::size_t t = t_lo; t <= t_hi; ++t) {
    double g = gaps[t - 1];
    if (!(g > 0.0) || !std::isfinite(g)) {
      throw NumericalError(fmt::format("gap({}) = {} cannot be log-fitted", t, g));
    }
    double x = static_cast<double>(t), y = std::log(g);
    st += x;
    sy += y;
    stt += x * x;
    sty += x * y;
  }
  const double slope = (m * sty - st * sy) / (m * stt - st * st);
  const double intercept = (sy - slope * st) / m;
  const double mean_y = sy / m;
  double ss_res = 0, ss_tot = 0;
  double log_envelope = -std::numeric_limits<double>::infinity();
  for (std::size_t t = t_lo; t <= t_hi; ++t) {
    double x = static_cast<double>(t), y = std::log(gaps[t - 1]);
    double r = y - (intercept + slope * x);
    ss_res += r * r;
    ss_tot += (y - mean_y) * (y - mean_y);
    log_envelope = std::max(log_envelope, y - slope * x);
  }
  GeometricFit fit;
  fit.lambda = std::exp(slope);
  fit.intercept_c = std::exp(intercept);
  fit.envelope_c = std::exp(log_envelope);
  fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

double max_gap_ratio(std::span<const double> gaps, std::size_t t_lo, std::size_t t_hi) {
  if (t_lo < 1 || t_hi + 1 > gaps.size() || t_hi < t_lo) {
    throw NumericalError(fmt::format("ratio window [{}, {}] invalid for {} gaps", t_lo, t_hi, gaps.size()));
  }
  double worst = 0.0;
  for (std::size_t t = t_lo; t <= t_hi; ++t) worst = std::max(worst, gaps[t] / gaps[t - 1]);
  return worst;
}

}  // namespace rgf
