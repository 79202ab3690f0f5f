#include "ncr/kernels.hpp"

#include <algorithm>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ncr::kernels {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr Index kRowChunk = 64;
constexpr Index kColChunk = 64;

int g_max_threads = 0;

int team_size() {
#ifdef _OPENMP
  return g_max_threads > 0 ? g_max_threads : omp_get_max_threads();
#else
  return 1;
#endif
}

void mirror_lower(Matrix& G) {
  const Index p = G.rows();
  for (Index j = 0; j < p; ++j) {
    for (Index i = j + 1; i < p; ++i) G(j, i) = G(i, j);
  }
}

}  // namespace

void set_max_threads(int threads) { g_max_threads = std::max(threads, 0); }
int max_threads() { return team_size(); }

namespace serial {

Matrix convolve(const CsrView& adj, double scale, const Matrix& X) {
  const Index n = X.rows();
  Matrix out = Matrix::Zero(n, X.cols());
  for (Index i = 0; i < n; ++i) {
    for (Index e = adj.offsets[i]; e < adj.offsets[i + 1]; ++e) {
      out.row(i) += X.row(adj.columns[e]);
    }
  }
  out *= scale;
  return out;
}

Vector cross_product(const Matrix& Z, const Vector& r) {
  Vector out(Z.cols());
  for (Index j = 0; j < Z.cols(); ++j) out(j) = Z.col(j).dot(r);
  return out;
}

Matrix gram(const Matrix& Z) {
  const Index p = Z.cols();
  Matrix G = Matrix::Zero(p, p);
  G.selfadjointView<Eigen::Lower>().rankUpdate(Z.transpose());
  mirror_lower(G);
  return G;
}

Vector column_sq_norms(const Matrix& Z) { return Z.colwise().squaredNorm().transpose(); }

}  // namespace serial

namespace parallel {

Matrix convolve(const CsrView& adj, double scale, const Matrix& X) {
  const Index n = X.rows();
  const RowMatrix Xr = X;
  RowMatrix out = RowMatrix::Zero(n, X.cols());
  const Index chunks = (n + kRowChunk - 1) / kRowChunk;
#pragma omp parallel for schedule(static) num_threads(team_size())
  for (Index c = 0; c < chunks; ++c) {
    const Index end = std::min(n, (c + 1) * kRowChunk);
    for (Index i = c * kRowChunk; i < end; ++i) {
      for (Index e = adj.offsets[i]; e < adj.offsets[i + 1]; ++e) {
        out.row(i) += Xr.row(adj.columns[e]);
      }
      out.row(i) *= scale;
    }
  }
  return Matrix(out);
}

Vector cross_product(const Matrix& Z, const Vector& r) {
  const Index p = Z.cols();
  Vector out(p);
  const Index chunks = (p + kColChunk - 1) / kColChunk;
#pragma omp parallel for schedule(static) num_threads(team_size())
  for (Index c = 0; c < chunks; ++c) {
    const Index end = std::min(p, (c + 1) * kColChunk);
    for (Index j = c * kColChunk; j < end; ++j) out(j) = Z.col(j).dot(r);
  }
  return out;
}

Matrix gram(const Matrix& Z) {
  const Index p = Z.cols();
  Matrix G(p, p);
  const Index chunks = (p + kColChunk - 1) / kColChunk;
  // Chunk c owns the lower-trapezoidal panel G[c0:, c0:c0+w].
#pragma omp parallel for schedule(dynamic) num_threads(team_size())
  for (Index c = 0; c < chunks; ++c) {
    const Index c0 = c * kColChunk;
    const Index w = std::min(kColChunk, p - c0);
    G.block(c0, c0, p - c0, w).noalias() = Z.rightCols(p - c0).transpose() * Z.middleCols(c0, w);
  }
  mirror_lower(G);
  return G;
}

Vector column_sq_norms(const Matrix& Z) {
  const Index p = Z.cols();
  Vector out(p);
#pragma omp parallel for schedule(static) num_threads(team_size())
  for (Index j = 0; j < p; ++j) out(j) = Z.col(j).squaredNorm();
  return out;
}

}  // namespace parallel

Matrix gram_rows(const Matrix& Z, std::span<const Index> rows) {
  Matrix sub(static_cast<Index>(rows.size()), Z.cols());
  for (Index r = 0; r < sub.rows(); ++r) sub.row(r) = Z.row(rows[r]);
  return parallel::gram(sub);
}

}  // namespace ncr::kernels
