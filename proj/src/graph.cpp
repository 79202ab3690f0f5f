#include "ncr/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ncr {

namespace {

// Calls emit(k) for every k in [0, count) that succeeds a Bernoulli(p) trial,
// in increasing order. Geometric skipping makes the cost O(successes).
template <class Emit>
void bernoulli_indices(std::uint64_t count, double p, Rng& rng, Emit&& emit) {
  if (count == 0 || p <= 0.0) return;
  if (p >= 1.0) {
    for (std::uint64_t k = 0; k < count; ++k) emit(k);
    return;
  }
  std::geometric_distribution<std::uint64_t> skip(p);
  std::uint64_t k = skip(rng);
  while (k < count) {
    emit(k);
    const std::uint64_t gap = skip(rng);
    if (gap >= count - k) break;
    k += gap + 1;
  }
}

// Ordered off-diagonal pairs (i, j), i != j, both in [lo, hi).
void sample_ordered(Index lo, Index hi, double p, Rng& rng, std::vector<Edge>& out) {
  const auto m = static_cast<std::uint64_t>(hi - lo);
  if (m < 2) return;
  bernoulli_indices(m * (m - 1), p, rng, [&](std::uint64_t k) {
    const auto i = static_cast<Index>(k / (m - 1));
    const auto c = static_cast<Index>(k % (m - 1));
    out.emplace_back(lo + i, lo + (c < i ? c : c + 1));
  });
}

// Unordered pairs i < j in [lo, hi); both directions are recorded.
void sample_upper(Index lo, Index hi, double p, Rng& rng, std::vector<Edge>& out) {
  const auto m = static_cast<std::uint64_t>(hi - lo);
  if (m < 2) return;
  Index row = 0;
  std::uint64_t row_start = 0;
  bernoulli_indices(m * (m - 1) / 2, p, rng, [&](std::uint64_t k) {
    while (k >= row_start + (m - 1 - static_cast<std::uint64_t>(row))) {
      row_start += m - 1 - static_cast<std::uint64_t>(row);
      ++row;
    }
    const Index i = lo + row;
    const Index j = i + 1 + static_cast<Index>(k - row_start);
    out.emplace_back(i, j);
    out.emplace_back(j, i);
  });
}

// Rectangle rows [r0, r1) x cols [c0, c1); mirrored when `both` is set.
void sample_rect(Index r0, Index r1, Index c0, Index c1, double p, bool both, Rng& rng,
                 std::vector<Edge>& out) {
  const auto h = static_cast<std::uint64_t>(r1 - r0);
  const auto w = static_cast<std::uint64_t>(c1 - c0);
  bernoulli_indices(h * w, p, rng, [&](std::uint64_t k) {
    const Index i = r0 + static_cast<Index>(k / w);
    const Index j = c0 + static_cast<Index>(k % w);
    out.emplace_back(i, j);
    if (both) out.emplace_back(j, i);
  });
}

void check_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw InvalidArgument(std::string("invalid probability ") + name + " = " + std::to_string(p) +
                          " (must lie in [0, 1])");
  }
}

}  // namespace

AdjacencyMatrix::AdjacencyMatrix(Index n, bool symmetric)
    : n_(n),
      symmetric_(symmetric),
      dense_(static_cast<std::size_t>(n * n), 0),
      offsets_(static_cast<std::size_t>(n + 1), 0) {
  require(n >= 1, "adjacency matrix needs n >= 1");
}

AdjacencyMatrix::AdjacencyMatrix(Index n, bool symmetric, std::vector<Edge> sorted_edges)
    : AdjacencyMatrix(n, symmetric) {
  columns_.reserve(sorted_edges.size());
  for (const auto& [i, j] : sorted_edges) {
    dense_[static_cast<std::size_t>(i * n_ + j)] = 1;
    ++offsets_[static_cast<std::size_t>(i + 1)];
    columns_.push_back(j);
  }
  for (Index i = 0; i < n_; ++i) offsets_[i + 1] += offsets_[i];
}

AdjacencyMatrix AdjacencyMatrix::from_edges(Index n, std::span<const Edge> edges) {
  require(n >= 1, "adjacency matrix needs n >= 1");
  std::vector<Edge> sorted(edges.begin(), edges.end());
  for (const auto& [i, j] : sorted) {
    if (i < 0 || j < 0 || i >= n || j >= n) {
      throw DataError("edge (" + std::to_string(i) + ", " + std::to_string(j) + ") outside 0.." +
                      std::to_string(n - 1));
    }
    if (i == j) throw DataError("self-loop at node " + std::to_string(i));
  }
  std::sort(sorted.begin(), sorted.end());
  const auto dup = std::adjacent_find(sorted.begin(), sorted.end());
  if (dup != sorted.end()) {
    throw DataError("duplicate edge (" + std::to_string(dup->first) + ", " + std::to_string(dup->second) + ")");
  }
  AdjacencyMatrix A(n, false, std::move(sorted));
  bool sym = true;
  for (Index i = 0; i < n && sym; ++i) {
    for (Index j : A.neighbors(i)) {
      if (!A(j, i)) {
        sym = false;
        break;
      }
    }
  }
  A.symmetric_ = sym;
  return A;
}

std::vector<Edge> AdjacencyMatrix::edges() const {
  std::vector<Edge> out;
  out.reserve(columns_.size());
  for (Index i = 0; i < n_; ++i) {
    for (Index j : neighbors(i)) out.emplace_back(i, j);
  }
  return out;
}

Matrix AdjacencyMatrix::dense() const {
  Matrix M = Matrix::Zero(n_, n_);
  for (Index i = 0; i < n_; ++i) {
    for (Index j : neighbors(i)) M(i, j) = 1.0;
  }
  return M;
}

AdjacencyMatrix AdjacencyMatrix::induced(std::span<const Index> nodes) const {
  const auto m = static_cast<Index>(nodes.size());
  std::vector<Index> position(static_cast<std::size_t>(n_), -1);
  for (Index a = 0; a < m; ++a) {
    require(nodes[a] >= 0 && nodes[a] < n_, "induced: node out of range");
    require(position[nodes[a]] < 0, "induced: repeated node");
    position[nodes[a]] = a;
  }
  std::vector<Edge> sub;
  for (Index a = 0; a < m; ++a) {
    for (Index j : neighbors(nodes[a])) {
      if (position[j] >= 0) sub.emplace_back(a, position[j]);
    }
  }
  std::sort(sub.begin(), sub.end());
  return AdjacencyMatrix(m, symmetric_, std::move(sub));
}

NormalizedAdjacency::NormalizedAdjacency(AdjacencyMatrix adjacency, double density)
    : adjacency_(std::move(adjacency)), density_(density) {
  if (!(density_ > 0.0)) throw EmptyGraph("normalized adjacency undefined: density is zero");
  const Index n = adjacency_.size();
  require(n >= 2, "normalized adjacency needs n >= 2");
  scale_ = 1.0 / std::sqrt(static_cast<double>(n - 1) * density_);
}

Matrix NormalizedAdjacency::apply(const Matrix& X) const {
  if (X.rows() != size()) {
    throw DimensionMismatch("A* is " + std::to_string(size()) + "x" + std::to_string(size()) + " but X has " +
                            std::to_string(X.rows()) + " rows");
  }
  return kernels::parallel::convolve(adjacency_.csr(), scale_, X);
}

Matrix NormalizedAdjacency::dense() const { return adjacency_.dense() * scale_; }

AdjacencyMatrix gen_er(Index n, double p, bool symmetric, Rng& rng) {
  require(n >= 1, "gen_er: n >= 1 required");
  check_probability(p, "p");
  std::vector<Edge> edges;
  if (symmetric) {
    sample_upper(0, n, p, rng, edges);
  } else {
    sample_ordered(0, n, p, rng, edges);
  }
  std::sort(edges.begin(), edges.end());
  return AdjacencyMatrix(n, symmetric, std::move(edges));
}

AdjacencyMatrix gen_sbm(Index n, double p_in, double p_out, Rng& rng, bool symmetric) {
  require(n >= 2, "gen_sbm: n >= 2 required");
  check_probability(p_in, "p_in");
  check_probability(p_out, "p_out");
  if (p_out > p_in) throw InvalidArgument("gen_sbm: p_out must not exceed p_in");
  const Index split = (n + 1) / 2;
  std::vector<Edge> edges;
  if (symmetric) {
    sample_upper(0, split, p_in, rng, edges);
    sample_upper(split, n, p_in, rng, edges);
    sample_rect(0, split, split, n, p_out, true, rng, edges);
  } else {
    sample_ordered(0, split, p_in, rng, edges);
    sample_ordered(split, n, p_in, rng, edges);
    sample_rect(0, split, split, n, p_out, false, rng, edges);
    sample_rect(split, n, 0, split, p_out, false, rng, edges);
  }
  std::sort(edges.begin(), edges.end());
  return AdjacencyMatrix(n, symmetric, std::move(edges));
}

double estimate_density(const AdjacencyMatrix& A) {
  const Index n = A.size();
  require(n >= 2, "estimate_density: n >= 2 required");
  return static_cast<double>(A.entry_count()) / (static_cast<double>(n) * static_cast<double>(n - 1));
}

NormalizedAdjacency normalize(const AdjacencyMatrix& A, std::optional<double> density_override) {
  const double density = density_override ? *density_override : estimate_density(A);
  if (density_override && !(*density_override > 0.0 && *density_override <= 1.0)) {
    throw InvalidArgument("density override must lie in (0, 1]");
  }
  return NormalizedAdjacency(A, density);
}

double sbm_expected_density(Index n, double p_in, double p_out) {
  const double a = static_cast<double>((n + 1) / 2);
  const double b = static_cast<double>(n) - a;
  const double within = a * (a - 1) + b * (b - 1);
  const double between = 2 * a * b;
  return (p_in * within + p_out * between) / (within + between);
}

}  // namespace ncr
