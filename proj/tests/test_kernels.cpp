#include "ncr/graph.hpp"
#include "ncr/kernels.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace ncr;

namespace {

Matrix naive_convolve(const AdjacencyMatrix& A, double scale, const Matrix& X) {
  Matrix out = Matrix::Zero(X.rows(), X.cols());
  for (Index i = 0; i < A.size(); ++i) {
    for (Index j = 0; j < A.size(); ++j) {
      if (A(i, j)) out.row(i) += scale * X.row(j);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("convolve matches a dense double loop") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = test::uniform_index(2, 40, rng);
    const Index d = test::uniform_index(1, 7, rng);
    const AdjacencyMatrix A = test::random_graph(n, test::uniform(0.0, 0.5, rng), rng);
    const Matrix X = test::gaussian_matrix(n, d, rng);
    const Matrix expected = naive_convolve(A, 0.7, X);
    CHECK((kernels::serial::convolve(A.csr(), 0.7, X) - expected).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((kernels::parallel::convolve(A.csr(), 0.7, X) - expected).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("cross_product, gram and column norms match Eigen") {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = test::uniform_index(1, 300, rng);
    const Index w = test::uniform_index(1, 40, rng);
    const Matrix Z = test::gaussian_matrix(n, w, rng);
    const Vector r = test::gaussian_vector(n, rng);
    const Vector zr = Z.transpose() * r;
    const Matrix g = Z.transpose() * Z;
    const Vector cn = Z.colwise().squaredNorm().transpose();
    for (const auto& v : {kernels::serial::cross_product(Z, r), kernels::parallel::cross_product(Z, r)}) {
      CHECK((v - zr).cwiseAbs().maxCoeff() < 1e-9);
    }
    for (const auto& m : {kernels::serial::gram(Z), kernels::parallel::gram(Z)}) {
      CHECK((m - g).cwiseAbs().maxCoeff() < 1e-9);
    }
    for (const auto& v : {kernels::serial::column_sq_norms(Z), kernels::parallel::column_sq_norms(Z)}) {
      CHECK((v - cn).cwiseAbs().maxCoeff() < 1e-9);
    }
  }
}

TEST_CASE("gram_rows equals the gram of the selected rows") {
  Rng rng(13);
  const Matrix Z = test::gaussian_matrix(50, 6, rng);
  const std::vector<Index> rows = {0, 3, 4, 17, 49};
  Matrix sub(static_cast<Index>(rows.size()), 6);
  for (std::size_t r = 0; r < rows.size(); ++r) sub.row(static_cast<Index>(r)) = Z.row(rows[r]);
  CHECK((kernels::gram_rows(Z, rows) - sub.transpose() * sub).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("parallel kernels are bit-identical across thread counts") {
  Rng rng(14);
  const Matrix Z = test::gaussian_matrix(1000, 33, rng);
  const Vector r = test::gaussian_vector(1000, rng);
  const AdjacencyMatrix A = gen_er(1000, 0.02, false, rng);
  kernels::set_max_threads(1);
  const Matrix g1 = kernels::parallel::gram(Z);
  const Vector c1 = kernels::parallel::cross_product(Z, r);
  const Matrix v1 = kernels::parallel::convolve(A.csr(), 0.3, Z);
  kernels::set_max_threads(4);
  CHECK(kernels::parallel::gram(Z) == g1);
  CHECK(kernels::parallel::cross_product(Z, r) == c1);
  CHECK(kernels::parallel::convolve(A.csr(), 0.3, Z) == v1);
  kernels::set_max_threads(0);
}
