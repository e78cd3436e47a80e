#pragma once

// Directed communication topologies, their stochastic weightings and the
// 2N x 2N augmented matrix that couples decision and surplus variables.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace rgf {

using Edge = std::pair<std::size_t, std::size_t>;

/// Fixed digraph on nodes 0..N-1. An edge (i, j) means j receives from i.
/// Every node carries an implicit self-loop, so each neighbor set contains
/// the node itself.
class Digraph {
 public:
  /// Throws ValidationError for n == 0 or out-of-range endpoints.
  /// Self-loops in `edges` are accepted and ignored; duplicates collapse.
  Digraph(std::size_t n, std::span<const Edge> edges);

  std::size_t size() const { return in_.size(); }

  /// Sorted, includes i.
  const std::vector<std::size_t>& in_neighbors(std::size_t i) const { return in_.at(i); }
  const std::vector<std::size_t>& out_neighbors(std::size_t i) const { return out_.at(i); }

  bool has_edge(std::size_t from, std::size_t to) const;

  /// Edges without self-loops, lexicographically sorted.
  std::vector<Edge> edges() const;

  friend bool operator==(const Digraph&, const Digraph&) = default;

 private:
  std::vector<std::vector<std::size_t>> in_;
  std::vector<std::vector<std::size_t>> out_;
};

bool is_strongly_connected(const Digraph& g);

/// Directed cycle i -> i+1 (mod n). Requires n >= 2.
Digraph make_cycle(std::size_t n);

/// Cycle in both directions (i <-> i+1). Requires n >= 2.
Digraph make_bidirectional_cycle(std::size_t n);

Digraph make_complete(std::size_t n);

/// Directed cycle backbone plus each remaining ordered pair with
/// probability `extra_edge_prob`. Deterministic in `seed`.
Digraph make_random_strongly_connected(std::size_t n, double extra_edge_prob, std::uint64_t seed);

/// Edge-list text: first line N, then one "i j" pair per line, 0-indexed;
/// "#" starts a comment.
/// Self-loops are implied and never written. Throws ConfigError on parse errors.
Digraph read_edge_list(std::istream& in);
void write_edge_list(std::ostream& out, const Digraph& g);

struct WeightPair {
  Eigen::MatrixXd row;  // row-stochastic, nonzero pattern = in-neighbors
  Eigen::MatrixXd col;  // column-stochastic, column j nonzero on out(j)

  std::size_t size() const { return static_cast<std::size_t>(row.rows()); }
};

/// row(i, j) = 1/|in(i)| for j in in(i); col(i, j) = 1/|out(j)| for i in out(j).
/// Rejects graphs that are not strongly connected.
WeightPair equal_neighbor_weights(const Digraph& g);

struct AugmentedMatrix {
  Eigen::MatrixXd matrix;  // [[W_r, dI], [I - W_r, W_c - dI]]
  double delta = 0.0;

  std::size_t agents() const { return static_cast<std::size_t>(matrix.rows() / 2); }
};

/// delta = 0 is allowed (it is the reference point for delta_hat);
/// negative or non-finite delta throws ValidationError.
AugmentedMatrix build_augmented(const WeightPair& wp, double delta);

/// [[11^T/N, 11^T/N], [0, 0]]: the limit of W^t under geometric convergence.
Eigen::MatrixXd augmented_limit(std::size_t n_agents);

/// Eigenvalue moduli of the augmented matrix, descending, with multiplicity.
std::vector<double> augmented_spectrum(const AugmentedMatrix& am);

/// ((1 - |s3|) / (20 + 8N))^N where s3 is the third eigenvalue, by modulus,
/// of the augmented matrix at delta = 0 (counted with multiplicity).
double delta_hat(const WeightPair& wp);

/// ||W^t - limit||_inf (max absolute row sum). Requires t >= 1.
double matrix_power_gap(const AugmentedMatrix& am, std::size_t t);

/// gaps[k] = matrix_power_gap(am, k + 1) for k < t_max, computed incrementally.
std::vector<double> gap_sequence(const AugmentedMatrix& am, std::size_t t_max);

/// Least-squares fit of log(gap(t)) = log(c0) + t log(lambda) over
/// t in [t_lo, t_hi]. `envelope_c` is the smallest C with gap(t) <= C lambda^t
/// on the window.
struct GeometricFit {
  double lambda = 0.0;
  double intercept_c = 0.0;
  double envelope_c = 0.0;
  double r_squared = 0.0;
};

/// `gaps` indexed as in gap_sequence (gaps[t - 1] is gap(t)).
/// Throws NumericalError if the window holds a nonpositive gap or fewer
/// than two points.
GeometricFit fit_geometric(std::span<const double> gaps, std::size_t t_lo, std::size_t t_hi);

/// max gap(t+1)/gap(t) for t in [t_lo, t_hi].
double max_gap_ratio(std::span<const double> gaps, std::size_t t_lo, std::size_t t_hi);

}  // namespace rgf
