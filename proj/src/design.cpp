#include "ncr/design.hpp"

#include "ncr/kernels.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <string>

namespace ncr {

DesignMatrix::DesignMatrix(Matrix Z, Index d, bool has_network)
    : Z_(std::move(Z)), d_(d), has_network_(has_network) {
  if (Z_.cols() != (has_network_ ? 2 * d_ : d_)) {
    throw DimensionMismatch("design has " + std::to_string(Z_.cols()) + " columns, expected " +
                            std::to_string(has_network_ ? 2 * d_ : d_));
  }
  column_sq_norms_ = kernels::parallel::column_sq_norms(Z_);
  if (Z_.rows() > 0) column_sq_norms_ /= static_cast<double>(Z_.rows());
}

Matrix DesignMatrix::network_block() const { return has_network_ ? Matrix(Z_.leftCols(d_)) : Matrix(Z_.rows(), 0); }

Matrix DesignMatrix::self_block() const { return Z_.rightCols(d_); }

DesignMatrix DesignMatrix::select_rows(std::span<const Index> rows) const {
  Matrix sub(static_cast<Index>(rows.size()), Z_.cols());
  for (Index r = 0; r < sub.rows(); ++r) {
    require(rows[r] >= 0 && rows[r] < Z_.rows(), "select_rows: row out of range");
    sub.row(r) = Z_.row(rows[r]);
  }
  return DesignMatrix(std::move(sub), d_, has_network_);
}

DesignMatrix build_design(const NormalizedAdjacency& Astar, const Matrix& X) {
  if (Astar.size() != X.rows()) {
    throw DimensionMismatch("build_design: A* has " + std::to_string(Astar.size()) + " nodes, X has " +
                            std::to_string(X.rows()) + " rows");
  }
  Matrix Z(X.rows(), 2 * X.cols());
  Z.leftCols(X.cols()) = Astar.apply(X);
  Z.rightCols(X.cols()) = X;
  return DesignMatrix(std::move(Z), X.cols(), true);
}

DesignMatrix build_design(const Matrix& X) { return DesignMatrix(X, X.cols(), false); }

Pooled pool(std::span<const Task> tasks) {
  require(!tasks.empty(), "pool: at least one task required");
  const Index width = tasks.front().design.cols();
  Index total = 0;
  for (const auto& t : tasks) {
    if (t.design.cols() != width) {
      throw DimensionMismatch("pool: width " + std::to_string(t.design.cols()) + " differs from " +
                              std::to_string(width));
    }
    if (t.design.rows() != t.y.size()) throw DimensionMismatch("pool: response length differs from design rows");
    total += t.design.rows();
  }
  Matrix Z(total, width);
  Vector y(total);
  Index at = 0;
  for (const auto& t : tasks) {
    Z.middleRows(at, t.design.rows()) = t.design.Z();
    y.segment(at, t.design.rows()) = t.y;
    at += t.design.rows();
  }
  const auto& first = tasks.front().design;
  return Pooled{DesignMatrix(std::move(Z), first.d(), first.has_network()), std::move(y), total};
}

Vector ols_fit(const DesignMatrix& Zd, const Vector& y) {
  if (Zd.rows() != y.size()) throw DimensionMismatch("ols_fit: response length differs from design rows");
  if (Zd.rows() <= Zd.cols()) {
    throw SingularDesign("ols_fit: need more rows (" + std::to_string(Zd.rows()) + ") than columns (" +
                         std::to_string(Zd.cols()) + ")");
  }
  const Matrix G = kernels::parallel::gram(Zd.Z());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(G, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(hi > 0.0) || lo <= 1e-10 * hi) {
    throw SingularDesign("ols_fit: Z^T Z is numerically singular (eigenvalue ratio " + std::to_string(lo / hi) + ")");
  }
  Eigen::LLT<Matrix> llt(G);
  if (llt.info() != Eigen::Success) throw SingularDesign("ols_fit: Cholesky factorization failed");
  return llt.solve(kernels::parallel::cross_product(Zd.Z(), y));
}

Moments& Moments::operator+=(const Moments& other) {
  if (n == 0 && gram.size() == 0) return *this = other;
  if (other.width() != width()) throw DimensionMismatch("moments: width mismatch");
  gram += other.gram;
  zty += other.zty;
  yty += other.yty;
  n += other.n;
  return *this;
}

Moments& Moments::operator-=(const Moments& other) {
  if (other.width() != width()) throw DimensionMismatch("moments: width mismatch");
  gram -= other.gram;
  zty -= other.zty;
  yty -= other.yty;
  n -= other.n;
  return *this;
}

Moments Moments::with_offset(const Vector& offset) const {
  if (offset.size() != width()) throw DimensionMismatch("moments: offset width mismatch");
  Moments out;
  const Vector g_off = gram * offset;
  out.gram = gram;
  out.zty = zty - g_off;
  out.yty = yty - 2.0 * offset.dot(zty) + offset.dot(g_off);
  out.n = n;
  return out;
}

Moments Moments::columns(Index first, Index w) const {
  require(first >= 0 && first + w <= width(), "moments: column range out of bounds");
  return Moments{gram.block(first, first, w, w), zty.segment(first, w), yty, n};
}

double Moments::residual_ss(const Vector& gamma) const {
  // Only the nonzero coordinates contribute to the quadratic form.
  double quad = 0.0;
  std::vector<Index> nz;
  for (Index j = 0; j < gamma.size(); ++j) {
    if (gamma(j) != 0.0) nz.push_back(j);
  }
  for (Index a : nz) {
    double row = 0.0;
    for (Index b : nz) row += gram(a, b) * gamma(b);
    quad += gamma(a) * row;
  }
  return yty - 2.0 * gamma.dot(zty) + quad;
}

Moments compute_moments(const DesignMatrix& Zd, const Vector& y) {
  if (Zd.rows() != y.size()) throw DimensionMismatch("moments: response length differs from design rows");
  return Moments{kernels::parallel::gram(Zd.Z()), kernels::parallel::cross_product(Zd.Z(), y), y.squaredNorm(),
                 Zd.rows()};
}

Moments compute_moments(const DesignMatrix& Zd, const Vector& y, std::span<const Index> rows) {
  if (Zd.rows() != y.size()) throw DimensionMismatch("moments: response length differs from design rows");
  Matrix sub(static_cast<Index>(rows.size()), Zd.cols());
  Vector ys(sub.rows());
  for (Index r = 0; r < sub.rows(); ++r) {
    sub.row(r) = Zd.Z().row(rows[r]);
    ys(r) = y(rows[r]);
  }
  return Moments{kernels::parallel::gram(sub), kernels::parallel::cross_product(sub, ys), ys.squaredNorm(),
                 sub.rows()};
}

}  // namespace ncr
