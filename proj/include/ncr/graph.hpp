#pragma once

#include "ncr/core.hpp"
#include "ncr/kernels.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace ncr {

using Edge = std::pair<Index, Index>;

/// Binary n x n relation with zero diagonal. Stored densely (one byte per
/// entry) alongside a row-compressed neighbor list used for products.
/// Immutable after construction.
class AdjacencyMatrix {
 public:
  /// Empty graph on n nodes.
  explicit AdjacencyMatrix(Index n = 1, bool symmetric = false);

  /// Builds from directed entries (i, j) meaning A(i, j) = 1. Rejects
  /// self-loops, out-of-range nodes and duplicate entries. The symmetric flag
  /// is set when the entry set is closed under transposition.
  static AdjacencyMatrix from_edges(Index n, std::span<const Edge> edges);

  Index size() const { return n_; }
  bool symmetric() const { return symmetric_; }
  bool operator()(Index i, Index j) const { return dense_[static_cast<std::size_t>(i * n_ + j)] != 0; }
  /// Number of nonzero entries (each direction counted).
  std::int64_t entry_count() const { return static_cast<std::int64_t>(columns_.size()); }

  std::span<const Index> neighbors(Index i) const {
    return {columns_.data() + offsets_[i], columns_.data() + offsets_[i + 1]};
  }
  kernels::CsrView csr() const { return {offsets_, columns_}; }

  /// All entries in row-major order.
  std::vector<Edge> edges() const;
  Matrix dense() const;
  /// Subgraph induced on `nodes` (relabelled 0..|nodes|-1 in the given order).
  AdjacencyMatrix induced(std::span<const Index> nodes) const;

 private:
  AdjacencyMatrix(Index n, bool symmetric, std::vector<Edge> sorted_edges);

  Index n_;
  bool symmetric_;
  std::vector<std::uint8_t> dense_;
  std::vector<Index> offsets_;
  std::vector<Index> columns_;

  friend AdjacencyMatrix gen_er(Index, double, bool, Rng&);
  friend AdjacencyMatrix gen_sbm(Index, double, double, Rng&, bool);
};

/// A / sqrt((n-1) * density). Entries are `scale` where A has a 1, else 0.
class NormalizedAdjacency {
 public:
  NormalizedAdjacency(AdjacencyMatrix adjacency, double density);

  Index size() const { return adjacency_.size(); }
  double scale() const { return scale_; }
  double density() const { return density_; }
  const AdjacencyMatrix& adjacency() const { return adjacency_; }

  /// A* X
  Matrix apply(const Matrix& X) const;
  Matrix dense() const;

 private:
  AdjacencyMatrix adjacency_;
  double density_;
  double scale_;
};

/// Erdos-Renyi graph: every off-diagonal entry (every unordered pair when
/// symmetric) is an independent Bernoulli(p) draw.
AdjacencyMatrix gen_er(Index n, double p, bool symmetric, Rng& rng);

/// Two-block balanced SBM. Nodes 0..ceil(n/2)-1 form the first community.
AdjacencyMatrix gen_sbm(Index n, double p_in, double p_out, Rng& rng, bool symmetric = true);

/// Off-diagonal density: sum_{i != j} A_ij / (n (n-1)).
double estimate_density(const AdjacencyMatrix& A);

/// Normalizes by the estimated density, or by `density_override` when given.
/// Throws EmptyGraph when the density used is zero.
NormalizedAdjacency normalize(const AdjacencyMatrix& A, std::optional<double> density_override = std::nullopt);

/// Expected off-diagonal density of the balanced two-block SBM.
double sbm_expected_density(Index n, double p_in, double p_out);

}  // namespace ncr
