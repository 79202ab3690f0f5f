#include "ncr/design.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace ncr;

TEST_CASE("build_design hand product") {
  const std::vector<Edge> e = {{0, 1}, {1, 0}, {2, 0}};
  const NormalizedAdjacency Astar(AdjacencyMatrix::from_edges(3, e), 0.5);  // scale 1
  Matrix X(3, 2);
  X << 1, 2, 3, 4, 5, 6;
  Matrix Z(3, 4);
  Z << 3, 4, 1, 2,  //
      1, 2, 3, 4,   //
      1, 2, 5, 6;
  const DesignMatrix Zd = build_design(Astar, X);
  CHECK(Zd.Z() == Z);
  CHECK(Zd.d() == 2);
  CHECK(Zd.has_network());
  CHECK(Zd.column_sq_norms()(0) == doctest::Approx((9.0 + 1.0 + 1.0) / 3.0));
}

TEST_CASE("build_design block extraction reproduces A* X and X") {
  Rng rng(1);
  const AdjacencyMatrix A = test::random_graph(25, 0.2, rng);
  const NormalizedAdjacency Astar = normalize(A);
  const Matrix X = test::gaussian_matrix(25, 5, rng);
  const DesignMatrix Zd = build_design(Astar, X);
  CHECK(Zd.network_block() == Astar.apply(X));
  CHECK(Zd.self_block() == X);
  const DesignMatrix plain = build_design(X);
  CHECK(plain.Z() == X);
  CHECK_FALSE(plain.has_network());
  CHECK(plain.network_block().cols() == 0);
}

TEST_CASE("zero convolution gives a zero network block") {
  Rng rng(2);
  // the only edge points at a zero row of X
  const std::vector<Edge> e = {{0, 1}};
  const NormalizedAdjacency Astar(AdjacencyMatrix::from_edges(4, e), 1.0);
  Matrix X = test::gaussian_matrix(4, 3, rng);
  X.row(1).setZero();
  CHECK(build_design(Astar, X).network_block().isZero());
}

TEST_CASE("pool stacks rows in order") {
  Rng rng(3);
  const Matrix a = test::gaussian_matrix(2, 3, rng);
  const Matrix b = test::gaussian_matrix(3, 3, rng);
  const std::vector<Task> one = {{build_design(a), Vector::Ones(2)}};
  const Pooled p1 = pool(one);
  CHECK(p1.design.Z() == a);
  const std::vector<Task> two = {{build_design(a), Vector::Ones(2)}, {build_design(b), Vector::Zero(3)}};
  const Pooled p2 = pool(two);
  CHECK(p2.n == 5);
  CHECK(p2.design.Z().topRows(2) == a);
  CHECK(p2.design.Z().bottomRows(3) == b);
  CHECK(p2.y.head(2).isOnes());
  CHECK(p2.y.tail(3).isZero());
}

TEST_CASE("ols_fit exact and orthogonal cases") {
  Rng rng(4);
  const Matrix Z = test::gaussian_matrix(50, 6, rng);
  const Vector g = test::gaussian_vector(6, rng);
  CHECK((ols_fit(DesignMatrix(Z, 6, false), Z * g) - g).norm() < 1e-8);

  const Eigen::HouseholderQR<Matrix> qr(test::gaussian_matrix(40, 4, rng));
  const Matrix Q = Matrix(qr.householderQ()).leftCols(4) * std::sqrt(40.0);  // Q^T Q / n = I
  const Vector y = test::gaussian_vector(40, rng);
  CHECK((ols_fit(DesignMatrix(Q, 4, false), y) - Q.transpose() * y / 40.0).norm() < 1e-10);
}

TEST_CASE("ols_fit at n = 2000, d = 3") {
  Rng rng(5);
  const AdjacencyMatrix A = gen_er(2000, 0.05, false, rng);
  const Matrix X = gen_covariates(2000, CovSpec{3, 0.8}, rng);
  const NormalizedAdjacency Astar = normalize(A);
  const CoefficientVector truth{Vector::Constant(3, 0.3), Vector::Constant(3, 0.4)};
  const Vector y = gen_response(Astar, X, truth, 1.0, rng);
  CHECK((ols_fit(build_design(Astar, X), y) - truth.gamma()).norm() < 0.15);
}

TEST_CASE("ols_fit refuses singular designs") {
  Rng rng(6);
  Matrix Z = test::gaussian_matrix(20, 3, rng);
  Z.col(2) = Z.col(0);
  CHECK_THROWS_AS(ols_fit(DesignMatrix(Z, 3, false), Vector::Ones(20)), SingularDesign);
  CHECK_THROWS_AS(ols_fit(DesignMatrix(test::gaussian_matrix(3, 3, rng), 3, false), Vector::Ones(3)), SingularDesign);
}

TEST_CASE("moments are additive and match direct products") {
  Rng rng(7);
  const Matrix Z = test::gaussian_matrix(30, 4, rng);
  const Vector y = test::gaussian_vector(30, rng);
  const DesignMatrix Zd(Z, 4, false);
  const Moments m = compute_moments(Zd, y);
  CHECK((m.gram - Z.transpose() * Z).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((m.zty - Z.transpose() * y).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(m.yty == doctest::Approx(y.squaredNorm()));
  std::vector<Index> first, second;
  for (Index i = 0; i < 30; ++i) (i % 3 == 0 ? first : second).push_back(i);
  Moments sum = compute_moments(Zd, y, first);
  sum += compute_moments(Zd, y, second);
  CHECK((sum.gram - m.gram).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(sum.n == 30);
  const Vector g = test::gaussian_vector(4, rng);
  CHECK(m.residual_ss(g) == doctest::Approx((y - Z * g).squaredNorm()).epsilon(1e-10));
  CHECK(m.with_offset(g).residual_ss(Vector::Zero(4)) == doctest::Approx((y - Z * g).squaredNorm()).epsilon(1e-10));
  Moments diff = m;
  diff -= compute_moments(Zd, y, second);
  CHECK((diff.zty - compute_moments(Zd, y, first).zty).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("select_rows keeps the listed rows") {
  Rng rng(8);
  const DesignMatrix Zd(test::gaussian_matrix(10, 2, rng), 2, false);
  const std::vector<Index> rows = {9, 0, 4};
  const DesignMatrix s = Zd.select_rows(rows);
  for (Index r = 0; r < 3; ++r) CHECK(s.Z().row(r) == Zd.Z().row(rows[r]));
}
