#pragma once

#include "ncr/core.hpp"
#include "ncr/graph.hpp"

#include <span>
#include <vector>

namespace ncr {

/// Z = (A* X, X), or just X for network-free baselines. Columns' mean squares
/// are cached because coordinate descent reads them on every sweep.
class DesignMatrix {
 public:
  /// Wraps an already assembled matrix. `d` is the feature dimension.
  DesignMatrix(Matrix Z, Index d, bool has_network);

  const Matrix& Z() const { return Z_; }
  Index rows() const { return Z_.rows(); }
  Index cols() const { return Z_.cols(); }
  Index d() const { return d_; }
  bool has_network() const { return has_network_; }
  /// sum_i Z_ij^2 / n
  const Vector& column_sq_norms() const { return column_sq_norms_; }

  /// A* X block (empty when there is no network block).
  Matrix network_block() const;
  Matrix self_block() const;
  DesignMatrix select_rows(std::span<const Index> rows) const;

 private:
  Matrix Z_;
  Index d_;
  bool has_network_;
  Vector column_sq_norms_;
};

DesignMatrix build_design(const NormalizedAdjacency& Astar, const Matrix& X);
DesignMatrix build_design(const Matrix& X);

struct Task {
  DesignMatrix design;
  Vector y;
};

/// Row-stacked in input order.
struct Pooled {
  DesignMatrix design;
  Vector y;
  Index n = 0;
};

Pooled pool(std::span<const Task> tasks);

/// (Z^T Z)^{-1} Z^T y via Cholesky. Throws SingularDesign when
/// lambda_min(Z^T Z) <= 1e-10 lambda_max(Z^T Z) or n <= width.
Vector ols_fit(const DesignMatrix& Zd, const Vector& y);

/// Sufficient statistics of a least squares problem over a set of rows:
/// gram = Z^T Z, zty = Z^T y, yty = y^T y, n rows. Additive over disjoint
/// row sets, which is what pooled fits and cross-validation folds exploit.
struct Moments {
  Matrix gram;
  Vector zty;
  double yty = 0.0;
  Index n = 0;

  Index width() const { return zty.size(); }

  Moments& operator+=(const Moments& other);
  Moments& operator-=(const Moments& other);

  /// Moments of the response y - Z offset over the same rows.
  Moments with_offset(const Vector& offset) const;
  /// Restriction to columns [first, first + width).
  Moments columns(Index first, Index width) const;
  /// sum over rows of (y - Z gamma)^2
  double residual_ss(const Vector& gamma) const;
};

Moments compute_moments(const DesignMatrix& Zd, const Vector& y);
Moments compute_moments(const DesignMatrix& Zd, const Vector& y, std::span<const Index> rows);

}  // namespace ncr
