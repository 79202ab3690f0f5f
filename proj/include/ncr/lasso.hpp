#pragma once

#include "ncr/core.hpp"
#include "ncr/design.hpp"

#include <optional>
#include <vector>

namespace ncr {

struct LassoConfig {
  double tol = 1e-7;      // max coefficient change that ends a pass
  int max_sweeps = 10000;
  double lambda = 0.0;
  /// Fit on unit mean-square columns and map back. Off by default: the
  /// normalized adjacency already balances the two blocks.
  bool standardize = false;
  /// A converged fit must also certify its KKT conditions to this level.
  double kkt_tol = 1e-6;
  bool record_trace = false;

  void validate() const;
};

struct FitResult {
  Vector gamma_hat;
  double lambda_used = 0.0;
  int sweeps = 0;
  /// (1/2n) ||y - Z gamma||^2 + lambda ||gamma||_1
  double objective = 0.0;
  /// max_j violation of the subgradient conditions
  double kkt_gap = 0.0;
  /// false when max_sweeps ran out first (NoConvergence)
  bool converged = true;
  /// objective after every sweep, when LassoConfig::record_trace is set
  std::vector<double> objective_trace;
};

double soft_threshold(double z, double t);

/// Cyclic coordinate descent on the rows of Z (residual updates). The first
/// pass visits every coordinate; later passes sweep the active set until it
/// settles, then a full pass confirms.
FitResult lasso_cd(const DesignMatrix& Zd, const Vector& y, const LassoConfig& cfg,
                   const std::optional<Vector>& warm_start = std::nullopt);

/// Same objective solved from sufficient statistics (covariance updates).
/// Per-coordinate cost is O(width) instead of O(n).
FitResult lasso_moments(const Moments& m, const LassoConfig& cfg,
                        const std::optional<Vector>& warm_start = std::nullopt);

/// ||Z^T y / n||_inf: the smallest lambda with an all-zero solution.
double lambda_max(const Moments& m);
double lambda_max(const DesignMatrix& Zd, const Vector& y);

/// c * sqrt(log d / n)
double theoretical_lambda(Index n, Index d, double c);

struct CvConfig {
  int folds = 5;
  int grid_size = 50;
  double min_ratio = 1e-3;  // smallest lambda on the grid, relative to lambda_max
  /// The path stops early once the full-data fit explains this fraction of
  /// y^T y; later points are interpolation and never win on held-out error.
  double max_explained = 0.999;
  /// ... or once the explained fraction grows by less than this relative
  /// amount between consecutive points, after at least min_path points.
  double min_explained_gain = 1e-5;
  int min_path = 5;
  /// ... or once this many consecutive points fail to improve the held-out
  /// error (0 evaluates the whole grid).
  int patience = 10;
  LassoConfig lasso;
};

/// Held-out moments of every fold plus their total.
struct CvProblem {
  Moments full;
  std::vector<Moments> heldout;

  int folds() const { return static_cast<int>(heldout.size()); }
  /// Pools another domain fold-by-fold.
  CvProblem& operator+=(const CvProblem& other);
  CvProblem with_offset(const Vector& offset) const;
  CvProblem columns(Index first, Index width) const;
};

/// Position-in-random-permutation modulo folds.
std::vector<int> fold_assignment(Index n, int folds, Rng& rng);
CvProblem make_cv_problem(const DesignMatrix& Zd, const Vector& y, int folds, Rng& rng);
CvProblem make_cv_problem(const DesignMatrix& Zd, const Vector& y, const std::vector<int>& assignment, int folds);

struct CvFit {
  FitResult fit;
  std::vector<double> lambdas;   // evaluated grid (possibly truncated)
  std::vector<double> cv_error;  // mean held-out squared error per lambda
  Index best = 0;
  double max_path_kkt = 0.0;     // worst KKT gap over every fold and path point
};

/// Log-spaced grid from lambda_max down to min_ratio * lambda_max, warm
/// started along the path for the full data and every fold in lockstep;
/// picks the lambda with the smallest mean held-out squared error and
/// returns the full-data path solution there.
CvFit cv_lasso(const CvProblem& problem, const CvConfig& cfg);
CvFit cv_lasso(const DesignMatrix& Zd, const Vector& y, const CvConfig& cfg, Rng& rng);

std::vector<double> lambda_grid(double lambda_max, int grid_size, double min_ratio);

}  // namespace ncr
