#pragma once

#include "ncr/core.hpp"
#include "ncr/detect.hpp"
#include "ncr/lasso.hpp"
#include "ncr/transfer.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace ncr {

/// sum_i (y_i - Z_i^T gamma)^2 over the validation rows.
double empirical_risk(const Vector& gamma, const Matrix& Zv, const Vector& yv);

struct AggregationConfig {
  double lambda_theta = 1.0;
  int max_iter = 2000;
  double tol = 1e-10;  // relative objective change that ends the iteration
  bool record_trace = false;

  void validate() const;
};

struct AggregationWeights {
  Vector theta;
  double objective = 0.0;
  int iterations = 0;
  bool converged = true;
  std::vector<double> objective_trace;
  /// objective at every vertex e_l
  Vector vertex_objectives;
};

/// Minimizes ||yv - P theta||^2 + theta^T q + (2 lambda_theta / n0) sum theta log theta
/// over the simplex, where P holds the candidates' validation predictions and
/// q their validation risks. Exponentiated gradient from the uniform point.
AggregationWeights q_aggregate(std::span<const Vector> fits, const Matrix& Zv, const Vector& yv, Index n0,
                               const AggregationConfig& cfg);

/// Objective of q_aggregate at a given theta.
double aggregation_objective(const Vector& theta, std::span<const Vector> fits, const Matrix& Zv, const Vector& yv,
                             Index n0, double lambda_theta);

struct TransNcrConfig {
  TransferConfig transfer;
  double c0 = 0.5;
  std::optional<Index> t_star;  // default ceil(|I| / 3)
  std::optional<Index> L;       // default K
  AggregationConfig aggregation;
  std::uint64_t seed = 0;       // target split

  void validate() const;
};

struct TransNcrResult {
  /// gamma_hat = sum_l theta_l gamma_hat(G_l); objective is the aggregation
  /// objective, sweeps the total over every candidate fit.
  FitResult fit;
  SplitIndex split;
  std::vector<SourceScore> scores;
  std::vector<std::vector<Index>> candidates;
  std::vector<Vector> candidate_gammas;
  Vector validation_risk;
  AggregationWeights weights;
};

/// Split the target, score and rank the sources, fit the two-step estimator
/// on the rows of I for every candidate set, aggregate on the rows of Ic.
TransNcrResult trans_ncr(const DomainData& target, std::span<const DomainData> sources, const TransNcrConfig& cfg);

}  // namespace ncr
