#pragma once

#include "ncr/core.hpp"
#include "ncr/design.hpp"
#include "ncr/lasso.hpp"
#include "ncr/synth.hpp"

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

namespace ncr {

struct CvRule {};

/// lambda_gamma = c1 sqrt(log d / n) + c2 h max{...}
struct TheoreticalGamma {
  double c1 = 1.0;
  double c2 = 1.0;
  double h = 0.0;
};

/// lambda_delta = c3 sqrt(log d / n0)
struct TheoreticalDelta {
  double c3 = 1.0;
};

using GammaRule = std::variant<CvRule, TheoreticalGamma>;
using DeltaRule = std::variant<CvRule, TheoreticalDelta>;

struct TransferConfig {
  GammaRule lambda_gamma = CvRule{};
  DeltaRule lambda_delta = CvRule{};
  CvConfig cv;
  /// Fold assignments: domain k (target 0, sources 1..K) uses stream k.
  std::uint64_t seed = 0;

  void validate() const;
};

struct ContrastVector {
  Vector delta;
  double l1_norm = 0.0;

  static ContrastVector from(Vector delta);
};

/// Indices k with ||delta_k||_1 <= h.
std::vector<Index> transferable_set(std::span<const ContrastVector> contrasts, double h);

/// c1 sqrt(log d / n) + c2 h max{ sqrt(log d sum_k (n_k + n_k^2 p_k^2)) / n,
/// log d max_k (n_k p_k) / n }. The sums run over every domain in the pool.
double lambda_gamma_theoretical(Index n, Index d, std::span<const Index> n_k, std::span<const double> p_k, double h,
                                double c1, double c2);

/// Z-hat = (A-hat X, X) with A normalized by its estimated density.
DesignMatrix ncr_design(const DomainData& domain);

/// Cross-validation statistics of one domain, with the density it was
/// normalized by (0 for network-free designs).
struct Prepared {
  CvProblem problem;
  double density = 0.0;

  Index n() const { return problem.full.n; }
};

Prepared prepare(const DesignMatrix& Zd, const Vector& y, double density, const TransferConfig& cfg,
                 std::uint64_t stream);

/// Running sum of prepared domains (the pooled transferring-step problem).
struct PooledProblem {
  CvProblem problem;
  std::vector<Index> sizes;
  std::vector<double> densities;

  void add(const Prepared& domain);
};

struct TransferFit {
  FitResult fit;            // gamma_hat = transfer_step + debias_step
  FitResult transfer_step;  // gamma-hat^A on the pool
  FitResult debias_step;    // delta-hat^A on the target residual
};

/// Both steps on prepared statistics. `d` is the feature dimension that
/// enters the theoretical penalties.
TransferFit run_transfer(const Prepared& target, const PooledProblem& pooled, Index d, const TransferConfig& cfg);

/// Penalized fit of one prepared problem under the lambda_gamma rule, with
/// the pool being that problem alone.
FitResult fit_single(const Prepared& domain, Index d, const TransferConfig& cfg);

/// Transferring step on target plus `sources` (taken as the transferable
/// set), then debiasing on the target. Source i uses fold stream i + 1.
TransferFit oracle_trans_ncr(const DomainData& target, std::span<const DomainData> sources, const TransferConfig& cfg);

FitResult target_only_ncr(const DomainData& target, const TransferConfig& cfg);

/// Lasso on X only; the returned vector has length 2d with a zero network block.
FitResult target_only_lasso(const DomainData& target, const TransferConfig& cfg);

/// The two-step algorithm on X-only designs; network block of the output is 0.
TransferFit trans_lasso_baseline(const DomainData& target, std::span<const DomainData> sources,
                                 const TransferConfig& cfg);

/// (0, gamma): pads a self-block-only coefficient vector.
Vector pad_network_block(const Vector& self_block);

}  // namespace ncr
