#pragma once

#include "ncr/core.hpp"
#include "ncr/design.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace ncr {

/// 1 / (-4 p log p), for 0 < p < 0.5.
double psi(double p);

struct PowerIterationConfig {
  double tol = 1e-8;
  int max_iter = 10000;
};

/// Largest eigenvalue of a symmetric positive semidefinite operator.
double power_iteration(const std::function<Vector(const Vector&)>& op, Index n, Rng& rng,
                       const PowerIterationConfig& cfg = {});

/// ||M||_2 via power iteration on M^T M.
double spectral_norm(const Matrix& M, Rng& rng, const PowerIterationConfig& cfg = {});

struct NormDraw {
  double op = 0.0;        // ||A*||_2
  double fro_sq = 0.0;    // ||A*||_F^2
  double gram_op = 0.0;   // ||A*^T A*||_2
  double gram_fro_sq = 0.0;
};

struct NormBoundsReport {
  Index n = 0;
  double p = 0.0;
  int reps = 0;
  // bounds 2 sqrt(np), 2n, 4np, 2n + 2 n^2 p^2
  double bound_op = 0.0;
  double bound_fro_sq = 0.0;
  double bound_gram_op = 0.0;
  double bound_gram_fro_sq = 0.0;
  // fraction of draws within each bound
  double freq_op = 0.0;
  double freq_fro_sq = 0.0;
  double freq_gram_op = 0.0;
  double freq_gram_fro_sq = 0.0;
  std::vector<NormDraw> draws;
};

/// Asymmetric ER draws normalized by the true p. Draw r uses stream r.
NormBoundsReport verify_norm_bounds(Index n, double p, int reps, std::uint64_t seed);

/// Norms of one normalized adjacency (power iteration for the operator norms).
NormDraw adjacency_norms(const Matrix& Astar, Rng& rng);

struct ZtzReport {
  Matrix mean;            // average of Z^T Z / n
  Matrix expected;        // I_2 kron Sigma_X
  double max_deviation = 0.0;
  double max_offdiag_block = 0.0;  // max |entry| of the mean's off-diagonal d x d blocks
};

/// ER(p) graphs normalized by the true p, AR(1) covariates.
ZtzReport verify_ztz_expectation(Index n, Index d, double rho, int reps, std::uint64_t seed, double p = 0.05);

struct OlsNormalityReport {
  Matrix covariance;  // empirical covariance of sqrt(n) (gamma_hat - gamma)
  Matrix expected;    // sigma^2 I_2 kron Sigma_X^{-1}
  /// ||covariance - expected||_F / ||expected||_F (absolute when expected = 0)
  double relative_frobenius = 0.0;
};

/// gamma = (0.3 * 1_d, 0.4 * 1_d), ER(p) graphs, rho = 0.8 covariates.
OlsNormalityReport verify_ols_normality(Index n, Index d, double sigma, int reps, std::uint64_t seed,
                                        double p = 0.05, double rho = 0.8);

/// Smallest eigenvalue of the AR(1) covariance rho^|i-j|.
double ar1_min_eigenvalue(Index d, double rho);

/// u^T Z^T Z u / n
double rsc_quadratic(const DesignMatrix& Zd, const Vector& u);

struct RscReport {
  double min_quadratic = 0.0;
  double mean_quadratic = 0.0;
  double kappa = 0.0;
  double psi = 0.0;
  /// smallest C5 with q >= kappa ||u||^2 - C5 log d sqrt(psi / n) ||u||_1 ||u||_2 on every trial
  double calibrated_c5 = 0.0;
  int trials = 0;
};

/// Random unit vectors with `s` nonzero coordinates (uniform support,
/// Gaussian values). `rho` and `p` describe the law Zd was drawn from.
RscReport rsc_probe(const DesignMatrix& Zd, Index s, int trials, std::uint64_t seed, double rho, double p);

struct PooledBiasSpec {
  Index n0 = 4000;
  std::vector<Index> source_sizes;
  Index d = 5;
  std::vector<Vector> deltas;  // length 2d each
  double sigma = 0.5;
  double rho = 0.8;
  double p = 0.05;
};

struct PooledBiasReport {
  Vector pooled_bias;    // gamma_hat_pooled - gamma_0
  Vector predicted;      // sum_k (n_k / n) delta_k
  double max_deviation = 0.0;
};

/// Pooled OLS over target and sources with gamma_k = gamma_0 + delta_k.
PooledBiasReport verify_pooled_bias(const PooledBiasSpec& spec, std::uint64_t seed);

}  // namespace ncr
