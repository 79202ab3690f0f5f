#pragma once

#include "ncr/core.hpp"
#include "ncr/graph.hpp"

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

namespace ncr {

/// AR(1) covariate law: Sigma_X(i, j) = rho^|i-j|.
struct CovSpec {
  Index d = 1;
  double rho = 0.8;

  Matrix covariance() const;
};

/// gamma = (beta0, beta1): network block first, matching Z = (A* X, X).
struct CoefficientVector {
  Vector beta0;
  Vector beta1;

  Index dim() const { return beta0.size(); }
  Vector gamma() const;
  static CoefficientVector from_gamma(const Vector& gamma);
};

struct ErModel {
  double p = 0.05;
};

struct SbmModel {
  double p_in = 0.1;
  double p_out = 0.05;
};

using GraphModel = std::variant<ErModel, SbmModel>;

/// Which target block the source self-effect is shifted from. The literal
/// simulation design bases both source blocks on the target network effect.
enum class SourceSelfBase { TargetNetwork, TargetSelf };

/// Density used when generating responses. Designs handed to the estimators
/// always use the estimated density.
enum class ResponseDensity { Estimated, True };

struct ScenarioSpec {
  Index n0 = 150;
  std::vector<Index> source_sizes;
  Index d = 500;
  GraphModel target_graph = ErModel{};
  std::vector<GraphModel> source_graphs;  // one per source
  std::vector<double> shifts;             // delta_k, one per source
  Index transferable_count = 0;           // the first |A| sources are transferable
  double rho = 0.8;
  double sigma = 1.0;
  bool symmetric = true;
  SourceSelfBase self_base = SourceSelfBase::TargetNetwork;
  ResponseDensity response_density = ResponseDensity::Estimated;
  std::uint64_t seed = 1;

  Index source_count() const { return static_cast<Index>(source_sizes.size()); }
  /// Throws InvalidArgument naming the offending field.
  void validate() const;

  /// Simulation default: n0 = 150, ten sources of 500 nodes, d = 500, ER with
  /// p = 0.05 everywhere, delta = 0.1 for the first five sources and 10 after.
  static ScenarioSpec er_default();
  /// Same with the two-block SBM (p_in = 0.1, p_out = 0.05) in every domain.
  static ScenarioSpec sbm_default();
};

/// One task: graph, covariates and response, plus the truth when simulated.
struct DomainData {
  AdjacencyMatrix adjacency;
  Matrix X;
  Vector y;
  std::optional<CoefficientVector> truth;

  Index size() const { return X.rows(); }
};

struct Scenario {
  DomainData target;
  std::vector<DomainData> sources;
};

/// Rows i.i.d. N(0, Sigma_X) via X_1 = z_1, X_j = rho X_{j-1} + sqrt(1-rho^2) z_j.
Matrix gen_covariates(Index n, const CovSpec& spec, Rng& rng);

/// beta00 = (0.3 * 1_16, 0), beta10 = (0.4 * 1_16, 0). Requires d >= 16.
CoefficientVector build_target_coefficients(Index d);

/// Both source blocks equal beta00 - (delta * 1_8, 0); with TargetSelf the
/// self block is beta10 - (delta * 1_8, 0) instead.
CoefficientVector build_source_coefficients(const CoefficientVector& target, double delta,
                                            SourceSelfBase base = SourceSelfBase::TargetNetwork);

/// y = A* X beta0 + X beta1 + eps, eps ~ N(0, sigma^2).
Vector gen_response(const NormalizedAdjacency& Astar, const Matrix& X, const CoefficientVector& gamma,
                    double sigma, Rng& rng);

AdjacencyMatrix gen_graph(const GraphModel& model, Index n, bool symmetric, Rng& rng);
double expected_density(const GraphModel& model, Index n);

/// Deterministic in spec.seed; domain k draws from its own stream.
Scenario build_scenario(const ScenarioSpec& spec);

/// Contrast gamma_k - gamma_0 of every source.
std::vector<Vector> source_contrasts(const Scenario& scenario);

}  // namespace ncr
