#include "ncr/diagnostics.hpp"

#include "ncr/graph.hpp"
#include "ncr/kernels.hpp"
#include "ncr/synth.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ncr {

double psi(double p) {
  require(p > 0.0 && p < 0.5, "psi: p must lie in (0, 0.5)");
  return 1.0 / (-4.0 * p * std::log(p));
}

double power_iteration(const std::function<Vector(const Vector&)>& op, Index n, Rng& rng,
                       const PowerIterationConfig& cfg) {
  require(n >= 1, "power_iteration: n must be >= 1");
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector x(n);
  for (Index i = 0; i < n; ++i) x(i) = normal(rng);
  x.normalize();
  double prev = 0.0;
  for (int it = 0; it < cfg.max_iter; ++it) {
    const Vector y = op(x);
    const double lambda = x.dot(y);
    const double norm = y.norm();
    if (norm == 0.0) return 0.0;
    x = y / norm;
    if (it > 0 && std::abs(lambda - prev) <= cfg.tol * std::max(std::abs(lambda), 1e-300)) return lambda;
    prev = lambda;
  }
  return prev;
}

double spectral_norm(const Matrix& M, Rng& rng, const PowerIterationConfig& cfg) {
  const double top = power_iteration([&](const Vector& v) { return Vector(M.transpose() * (M * v)); }, M.cols(), rng,
                                     cfg);
  return std::sqrt(std::max(top, 0.0));
}

NormDraw adjacency_norms(const Matrix& Astar, Rng& rng) {
  NormDraw d;
  d.op = spectral_norm(Astar, rng);
  d.fro_sq = Astar.squaredNorm();
  Matrix B = Matrix::Zero(Astar.cols(), Astar.cols());
  B.selfadjointView<Eigen::Lower>().rankUpdate(Astar.transpose());
  B.triangularView<Eigen::StrictlyUpper>() = B.transpose();
  d.gram_op = power_iteration([&](const Vector& v) { return Vector(B * v); }, B.cols(), rng);
  d.gram_fro_sq = B.squaredNorm();
  return d;
}

NormBoundsReport verify_norm_bounds(Index n, double p, int reps, std::uint64_t seed) {
  require(n >= 2, "verify_norm_bounds: n must be >= 2");
  require(p > 0.0 && p <= 1.0, "verify_norm_bounds: p must lie in (0, 1]");
  require(reps >= 1, "verify_norm_bounds: reps must be >= 1");
  NormBoundsReport r;
  r.n = n;
  r.p = p;
  r.reps = reps;
  const double nd = static_cast<double>(n);
  r.bound_op = 2.0 * std::sqrt(nd * p);
  r.bound_fro_sq = 2.0 * nd;
  r.bound_gram_op = 4.0 * nd * p;
  r.bound_gram_fro_sq = 2.0 * nd + 2.0 * nd * nd * p * p;
  r.draws.resize(static_cast<std::size_t>(reps));
#pragma omp parallel for schedule(dynamic) num_threads(kernels::max_threads())
  for (int rep = 0; rep < reps; ++rep) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(rep));
    const AdjacencyMatrix A = gen_er(n, p, false, rng);
    r.draws[rep] = adjacency_norms(NormalizedAdjacency(A, p).dense(), rng);
  }
  for (const auto& d : r.draws) {
    r.freq_op += d.op <= r.bound_op;
    r.freq_fro_sq += d.fro_sq <= r.bound_fro_sq;
    r.freq_gram_op += d.gram_op <= r.bound_gram_op;
    r.freq_gram_fro_sq += d.gram_fro_sq <= r.bound_gram_fro_sq;
  }
  r.freq_op /= reps;
  r.freq_fro_sq /= reps;
  r.freq_gram_op /= reps;
  r.freq_gram_fro_sq /= reps;
  return r;
}

namespace {

Matrix kron_identity2(const Matrix& S) {
  const Index d = S.rows();
  Matrix out = Matrix::Zero(2 * d, 2 * d);
  out.topLeftCorner(d, d) = S;
  out.bottomRightCorner(d, d) = S;
  return out;
}

DesignMatrix draw_design(Index n, Index d, double rho, double p, Rng& rng) {
  const AdjacencyMatrix A = gen_er(n, p, false, rng);
  const Matrix X = gen_covariates(n, CovSpec{d, rho}, rng);
  return build_design(NormalizedAdjacency(A, p), X);
}

}  // namespace

ZtzReport verify_ztz_expectation(Index n, Index d, double rho, int reps, std::uint64_t seed, double p) {
  require(n >= 2 && d >= 1 && reps >= 1, "verify_ztz_expectation: n >= 2, d >= 1, reps >= 1 required");
  std::vector<Matrix> draws(static_cast<std::size_t>(reps));
#pragma omp parallel for schedule(dynamic) num_threads(kernels::max_threads())
  for (int rep = 0; rep < reps; ++rep) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(rep));
    const DesignMatrix Zd = draw_design(n, d, rho, p, rng);
    draws[rep] = Zd.Z().transpose() * Zd.Z() / static_cast<double>(n);
  }
  ZtzReport r;
  r.mean = Matrix::Zero(2 * d, 2 * d);
  for (const auto& m : draws) r.mean += m;
  r.mean /= reps;
  r.expected = kron_identity2(CovSpec{d, rho}.covariance());
  r.max_deviation = (r.mean - r.expected).cwiseAbs().maxCoeff();
  r.max_offdiag_block = std::max(r.mean.topRightCorner(d, d).cwiseAbs().maxCoeff(),
                                 r.mean.bottomLeftCorner(d, d).cwiseAbs().maxCoeff());
  return r;
}

OlsNormalityReport verify_ols_normality(Index n, Index d, double sigma, int reps, std::uint64_t seed, double p,
                                        double rho) {
  require(reps >= 2, "verify_ols_normality: reps must be >= 2");
  require(sigma >= 0.0, "verify_ols_normality: sigma must be >= 0");
  const CoefficientVector truth{Vector::Constant(d, 0.3), Vector::Constant(d, 0.4)};
  const Vector gamma = truth.gamma();
  std::vector<Vector> errs(static_cast<std::size_t>(reps));
#pragma omp parallel for schedule(dynamic) num_threads(kernels::max_threads())
  for (int rep = 0; rep < reps; ++rep) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(rep));
    const AdjacencyMatrix A = gen_er(n, p, false, rng);
    const Matrix X = gen_covariates(n, CovSpec{d, rho}, rng);
    const NormalizedAdjacency Astar(A, p);
    const Vector y = gen_response(Astar, X, truth, sigma, rng);
    errs[rep] = std::sqrt(static_cast<double>(n)) * (ols_fit(build_design(Astar, X), y) - gamma);
  }
  Vector mean = Vector::Zero(2 * d);
  for (const auto& e : errs) mean += e;
  mean /= reps;
  OlsNormalityReport r;
  r.covariance = Matrix::Zero(2 * d, 2 * d);
  for (const auto& e : errs) r.covariance += (e - mean) * (e - mean).transpose();
  r.covariance /= static_cast<double>(reps - 1);
  r.expected = sigma * sigma * kron_identity2(CovSpec{d, rho}.covariance().inverse());
  const double scale = r.expected.norm();
  const double diff = (r.covariance - r.expected).norm();
  r.relative_frobenius = scale > 0.0 ? diff / scale : diff;
  return r;
}

namespace {

// Eigenvalues of the tridiagonal matrix below x (Sturm count).
Index sturm_count(const Vector& diag, const Vector& off, double x) {
  Index count = 0;
  double q = diag(0) - x;
  if (q < 0.0) ++count;
  for (Index i = 1; i < diag.size(); ++i) {
    const double prev = q != 0.0 ? q : 1e-300;
    q = diag(i) - x - off(i - 1) * off(i - 1) / prev;
    if (q < 0.0) ++count;
  }
  return count;
}

}  // namespace

double ar1_min_eigenvalue(Index d, double rho) {
  require(d >= 1, "ar1_min_eigenvalue: d must be >= 1");
  require(rho >= 0.0 && rho < 1.0, "ar1_min_eigenvalue: rho must lie in [0, 1)");
  if (d == 1 || rho == 0.0) return 1.0;
  if (d <= 64) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(CovSpec{d, rho}.covariance(), Eigen::EigenvaluesOnly);
    return eig.eigenvalues().minCoeff();
  }
  // Sigma^{-1} = T / (1 - rho^2), T tridiagonal; lambda_min(Sigma) = 1 / lambda_max(Sigma^{-1}).
  Vector diag = Vector::Constant(d, 1.0 + rho * rho);
  diag(0) = 1.0;
  diag(d - 1) = 1.0;
  const Vector off = Vector::Constant(d - 1, -rho);
  double lo = 0.0;
  double hi = 1.0 + rho * rho + 2.0 * rho;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (sturm_count(diag, off, mid) < d) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return (1.0 - rho * rho) / (0.5 * (lo + hi));
}

double rsc_quadratic(const DesignMatrix& Zd, const Vector& u) {
  if (u.size() != Zd.cols()) throw DimensionMismatch("rsc_quadratic: u length differs from design width");
  return (Zd.Z() * u).squaredNorm() / static_cast<double>(Zd.rows());
}

RscReport rsc_probe(const DesignMatrix& Zd, Index s, int trials, std::uint64_t seed, double rho, double p) {
  require(s >= 1 && s <= Zd.cols(), "rsc_probe: sparsity must lie in [1, width]");
  require(trials >= 1, "rsc_probe: trials must be >= 1");
  RscReport r;
  r.trials = trials;
  r.kappa = ar1_min_eigenvalue(Zd.d(), rho);
  r.psi = psi(p);
  const double slack_unit = std::log(static_cast<double>(Zd.d())) * std::sqrt(r.psi / static_cast<double>(Zd.rows()));
  std::vector<double> q(static_cast<std::size_t>(trials));
  std::vector<double> c5(static_cast<std::size_t>(trials));
#pragma omp parallel for schedule(static) num_threads(kernels::max_threads())
  for (int t = 0; t < trials; ++t) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(t));
    std::vector<Index> idx(static_cast<std::size_t>(Zd.cols()));
    std::iota(idx.begin(), idx.end(), Index{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector u = Vector::Zero(Zd.cols());
    for (Index k = 0; k < s; ++k) u(idx[k]) = normal(rng);
    if (u.norm() == 0.0) u(idx[0]) = 1.0;
    u.normalize();
    q[t] = rsc_quadratic(Zd, u);
    const double denom = slack_unit * u.lpNorm<1>() * u.norm();
    c5[t] = denom > 0.0 ? std::max(0.0, (r.kappa * u.squaredNorm() - q[t]) / denom) : 0.0;
  }
  r.min_quadratic = *std::min_element(q.begin(), q.end());
  r.mean_quadratic = std::accumulate(q.begin(), q.end(), 0.0) / trials;
  r.calibrated_c5 = *std::max_element(c5.begin(), c5.end());
  return r;
}

PooledBiasReport verify_pooled_bias(const PooledBiasSpec& spec, std::uint64_t seed) {
  require(spec.deltas.size() == spec.source_sizes.size(), "pooled_bias: one delta per source required");
  require(spec.d >= 1, "pooled_bias: d must be >= 1");
  const CoefficientVector target{Vector::Constant(spec.d, 0.3), Vector::Constant(spec.d, 0.4)};
  const Vector g0 = target.gamma();
  std::vector<Task> tasks;
  auto add = [&](Index n, const Vector& gamma, std::uint64_t stream) {
    Rng rng = make_rng(seed, stream);
    const AdjacencyMatrix A = gen_er(n, spec.p, false, rng);
    const Matrix X = gen_covariates(n, CovSpec{spec.d, spec.rho}, rng);
    const NormalizedAdjacency Astar = normalize(A);
    const Vector y = gen_response(Astar, X, CoefficientVector::from_gamma(gamma), spec.sigma, rng);
    tasks.push_back(Task{build_design(Astar, X), y});
  };
  add(spec.n0, g0, 0);
  Index total = spec.n0;
  PooledBiasReport r;
  r.predicted = Vector::Zero(2 * spec.d);
  for (std::size_t k = 0; k < spec.source_sizes.size(); ++k) {
    if (spec.deltas[k].size() != 2 * spec.d) throw DimensionMismatch("pooled_bias: every delta needs length 2d");
    add(spec.source_sizes[k], g0 + spec.deltas[k], k + 1);
    total += spec.source_sizes[k];
  }
  for (std::size_t k = 0; k < spec.source_sizes.size(); ++k) {
    r.predicted += static_cast<double>(spec.source_sizes[k]) / static_cast<double>(total) * spec.deltas[k];
  }
  const Pooled pooled = pool(tasks);
  r.pooled_bias = ols_fit(pooled.design, pooled.y) - g0;
  r.max_deviation = (r.pooled_bias - r.predicted).cwiseAbs().maxCoeff();
  return r;
}

}  // namespace ncr
