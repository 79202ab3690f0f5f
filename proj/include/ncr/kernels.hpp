#pragma once

// Dense inner loops used by the estimators. Every kernel exists twice:
// `serial::` is the straightforward reference kept for tests and the
// benchmark, `parallel::` is the OpenMP version the library calls.
//
// The parallel kernels split work into fixed-size chunks whose boundaries do
// not depend on the thread count, and each output entry is produced by a
// single chunk, so results are bit-identical for any OMP_NUM_THREADS.

#include "ncr/core.hpp"

#include <span>

namespace ncr::kernels {

/// Compressed row storage view of a 0/1 adjacency matrix.
struct CsrView {
  std::span<const Index> offsets;  // size n+1
  std::span<const Index> columns;  // neighbors of row i: columns[offsets[i]..offsets[i+1])
};

namespace serial {

/// scale * A * X
Matrix convolve(const CsrView& adj, double scale, const Matrix& X);
/// Z^T r
Vector cross_product(const Matrix& Z, const Vector& r);
/// Z^T Z
Matrix gram(const Matrix& Z);
Vector column_sq_norms(const Matrix& Z);

}  // namespace serial

namespace parallel {

Matrix convolve(const CsrView& adj, double scale, const Matrix& X);
Vector cross_product(const Matrix& Z, const Vector& r);
Matrix gram(const Matrix& Z);
Vector column_sq_norms(const Matrix& Z);

}  // namespace parallel

/// Gram matrix of a row subset, Z[rows,:]^T Z[rows,:].
Matrix gram_rows(const Matrix& Z, std::span<const Index> rows);

/// Threads the parallel kernels may use (0 means the OpenMP default).
void set_max_threads(int threads);
int max_threads();

}  // namespace ncr::kernels
