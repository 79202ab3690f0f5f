#pragma once

#include "ncr/core.hpp"
#include "ncr/design.hpp"
#include "ncr/graph.hpp"
#include "ncr/synth.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <vector>

namespace ncr::test {

inline Matrix gaussian_matrix(Index rows, Index cols, Rng& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  Matrix M(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) M(i, j) = z(rng);
  }
  return M;
}

inline Vector gaussian_vector(Index n, Rng& rng) { return gaussian_matrix(n, 1, rng).col(0); }

inline Index uniform_index(Index lo, Index hi, Rng& rng) {
  return std::uniform_int_distribution<Index>(lo, hi)(rng);
}

inline double uniform(double lo, double hi, Rng& rng) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

/// Random directed graph given as an explicit entry list.
inline AdjacencyMatrix random_graph(Index n, double p, Rng& rng) {
  std::bernoulli_distribution coin(p);
  std::vector<Edge> edges;
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (i != j && coin(rng)) edges.emplace_back(i, j);
    }
  }
  return AdjacencyMatrix::from_edges(n, edges);
}

/// Small scenario that every estimator fits in well under a second.
inline ScenarioSpec tiny_spec(std::uint64_t seed = 7) {
  ScenarioSpec s;
  s.n0 = 60;
  s.d = 20;
  s.source_sizes = {80, 80, 80};
  s.shifts = {0.1, 0.1, 10.0};
  s.source_graphs = {ErModel{0.1}, ErModel{0.1}, ErModel{0.1}};
  s.target_graph = ErModel{0.1};
  s.transferable_count = 2;
  s.seed = seed;
  return s;
}

/// (1/2n) ||y - Z g||^2 + lambda ||g||_1 evaluated from scratch.
inline double lasso_objective(const Matrix& Z, const Vector& y, const Vector& g, double lambda) {
  const double n = static_cast<double>(Z.rows());
  return (y - Z * g).squaredNorm() / (2.0 * n) + lambda * g.lpNorm<1>();
}

/// Exact lasso minimum by enumerating every sign pattern in {-1, 0, 1}^w:
/// on a fixed pattern the stationarity equations are linear, and the global
/// minimizer is the best sign-consistent solution. Only for tiny widths.
inline Vector brute_force_lasso(const Matrix& Z, const Vector& y, double lambda) {
  const Index w = Z.cols();
  const double n = static_cast<double>(Z.rows());
  const Matrix G = Z.transpose() * Z / n;
  const Vector c = Z.transpose() * y / n;
  Vector best = Vector::Zero(w);
  double best_obj = lasso_objective(Z, y, best, lambda);
  Index patterns = 1;
  for (Index j = 0; j < w; ++j) patterns *= 3;
  for (Index code = 1; code < patterns; ++code) {
    std::vector<Index> support;
    std::vector<double> sign;
    Index rest = code;
    for (Index j = 0; j < w; ++j) {
      const Index digit = rest % 3;
      rest /= 3;
      if (digit != 0) {
        support.push_back(j);
        sign.push_back(digit == 1 ? 1.0 : -1.0);
      }
    }
    const Index k = static_cast<Index>(support.size());
    Matrix Gs(k, k);
    Vector rhs(k);
    for (Index a = 0; a < k; ++a) {
      rhs(a) = c(support[a]) - lambda * sign[a];
      for (Index b = 0; b < k; ++b) Gs(a, b) = G(support[a], support[b]);
    }
    const Vector gs = Gs.ldlt().solve(rhs);
    bool consistent = true;
    for (Index a = 0; a < k; ++a) consistent = consistent && gs(a) * sign[a] > 0.0;
    if (!consistent) continue;
    Vector g = Vector::Zero(w);
    for (Index a = 0; a < k; ++a) g(support[a]) = gs(a);
    const double obj = lasso_objective(Z, y, g, lambda);
    if (obj < best_obj) {
      best_obj = obj;
      best = g;
    }
  }
  return best;
}

/// Max violation of the lasso subgradient conditions at g.
inline double kkt_violation(const Matrix& Z, const Vector& y, const Vector& g, double lambda) {
  const Vector grad = Z.transpose() * (y - Z * g) / static_cast<double>(Z.rows());
  double worst = 0.0;
  for (Index j = 0; j < g.size(); ++j) {
    const double v = g(j) != 0.0 ? std::abs(grad(j) - lambda * (g(j) > 0 ? 1.0 : -1.0))
                                 : std::max(0.0, std::abs(grad(j)) - lambda);
    worst = std::max(worst, v);
  }
  return worst;
}

}  // namespace ncr::test
