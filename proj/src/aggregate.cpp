#include "ncr/aggregate.hpp"

#include "ncr/design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ncr {

double empirical_risk(const Vector& gamma, const Matrix& Zv, const Vector& yv) {
  if (Zv.rows() != yv.size() || Zv.cols() != gamma.size()) throw DimensionMismatch("empirical_risk: shape mismatch");
  require(Zv.rows() >= 1, "empirical_risk: validation set is empty");
  return (yv - Zv * gamma).squaredNorm();
}

void AggregationConfig::validate() const {
  require(lambda_theta >= 0.0, "aggregation.lambda_theta must be >= 0");
  require(max_iter >= 1, "aggregation.max_iter must be >= 1");
  require(tol > 0.0, "aggregation.tol must be > 0");
}

namespace {

struct Problem {
  Matrix P;   // validation predictions, one column per candidate
  Vector q;   // validation risks
  const Vector& y;
  double entropy_weight;

  double value(const Vector& theta) const {
    double ent = 0.0;
    for (Index l = 0; l < theta.size(); ++l) {
      if (theta(l) > 0.0) ent += theta(l) * std::log(theta(l));
    }
    return (y - P * theta).squaredNorm() + theta.dot(q) + entropy_weight * ent;
  }

  Vector gradient(const Vector& theta) const {
    Vector g = -2.0 * P.transpose() * (y - P * theta) + q;
    for (Index l = 0; l < theta.size(); ++l) g(l) += entropy_weight * (std::log(std::max(theta(l), 1e-300)) + 1.0);
    return g;
  }
};

Problem make_problem(std::span<const Vector> fits, const Matrix& Zv, const Vector& yv, Index n0, double lambda_theta) {
  require(!fits.empty(), "q_aggregate: at least one candidate required");
  require(n0 >= 1, "q_aggregate: n0 must be >= 1");
  if (Zv.rows() != yv.size()) throw DimensionMismatch("q_aggregate: validation shape mismatch");
  Problem pr{Matrix(Zv.rows(), static_cast<Index>(fits.size())), Vector(static_cast<Index>(fits.size())), yv,
             2.0 * lambda_theta / static_cast<double>(n0)};
  for (std::size_t l = 0; l < fits.size(); ++l) {
    if (fits[l].size() != Zv.cols()) throw DimensionMismatch("q_aggregate: candidate length differs from design width");
    pr.P.col(static_cast<Index>(l)) = Zv * fits[l];
    pr.q(static_cast<Index>(l)) = (yv - pr.P.col(static_cast<Index>(l))).squaredNorm();
  }
  return pr;
}

}  // namespace

double aggregation_objective(const Vector& theta, std::span<const Vector> fits, const Matrix& Zv, const Vector& yv,
                             Index n0, double lambda_theta) {
  const Problem pr = make_problem(fits, Zv, yv, n0, lambda_theta);
  if (theta.size() != pr.q.size()) throw DimensionMismatch("aggregation_objective: theta length");
  return pr.value(theta);
}

AggregationWeights q_aggregate(std::span<const Vector> fits, const Matrix& Zv, const Vector& yv, Index n0,
                               const AggregationConfig& cfg) {
  cfg.validate();
  const Problem pr = make_problem(fits, Zv, yv, n0, cfg.lambda_theta);
  const Index m = pr.q.size();
  AggregationWeights out;
  out.vertex_objectives = 2.0 * pr.q;
  if (m == 1) {
    out.theta = Vector::Ones(1);
    out.objective = pr.value(out.theta);
    return out;
  }

  const double bound = pr.q.cwiseAbs().maxCoeff() +
                       2.0 * ((pr.P.transpose() * yv).cwiseAbs().maxCoeff() +
                              (pr.P.transpose() * pr.P).cwiseAbs().maxCoeff());
  double step = bound > 0.0 ? 1.0 / (2.0 * bound) : 1.0;

  Vector theta = Vector::Constant(m, 1.0 / static_cast<double>(m));
  double f = pr.value(theta);
  out.converged = false;
  int it = 0;
  while (it < cfg.max_iter) {
    ++it;
    const Vector g = pr.gradient(theta);
    const double shift = g.minCoeff();
    Vector next;
    double fn = f;
    bool moved = false;
    for (int halving = 0; halving < 60; ++halving) {
      next = theta.array() * (-(step) * (g.array() - shift)).exp();
      next /= next.sum();
      fn = pr.value(next);
      if (fn <= f) {
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) {
      out.converged = true;
      break;
    }
    const double change = f - fn;
    theta = next;
    f = fn;
    if (cfg.record_trace) out.objective_trace.push_back(f);
    if (change <= cfg.tol * std::max(1.0, std::abs(f))) {
      out.converged = true;
      break;
    }
  }
  out.iterations = it;

  Index best = 0;
  out.vertex_objectives.minCoeff(&best);
  if (out.vertex_objectives(best) < f) {
    theta.setZero();
    theta(best) = 1.0;
    f = out.vertex_objectives(best);
  }
  out.theta = theta;
  out.objective = f;
  return out;
}

void TransNcrConfig::validate() const {
  transfer.validate();
  aggregation.validate();
  require(c0 > 0.0 && c0 < 1.0, "c0 must lie in (0, 1)");
  if (t_star) require(*t_star >= 1, "t_star must be >= 1");
  if (L) require(*L >= 0, "L must be >= 0");
}

namespace {

constexpr std::uint64_t kSplitStream = 0x5011ULL << 32;

}  // namespace

TransNcrResult trans_ncr(const DomainData& target, std::span<const DomainData> sources, const TransNcrConfig& cfg) {
  cfg.validate();
  const Index K = static_cast<Index>(sources.size());
  const Index L = cfg.L.value_or(K);
  require(L <= K, "L must not exceed the number of sources");
  const Index d = target.X.cols();

  TransNcrResult out;
  Rng split_rng = make_rng(cfg.seed, kSplitStream);
  out.split = split_target(target.X.rows(), cfg.c0, split_rng);
  out.scores = source_scores(sources, target, out.split, cfg.t_star);
  out.candidates = candidate_sets(out.scores, L);

  const DesignMatrix Z0 = ncr_design(target);
  const DesignMatrix Zi = Z0.select_rows(out.split.I);
  const DesignMatrix Zv = Z0.select_rows(out.split.Ic);
  Vector yi(Zi.rows());
  Vector yv(Zv.rows());
  for (std::size_t r = 0; r < out.split.I.size(); ++r) yi(static_cast<Index>(r)) = target.y(out.split.I[r]);
  for (std::size_t r = 0; r < out.split.Ic.size(); ++r) yv(static_cast<Index>(r)) = target.y(out.split.Ic[r]);

  const Prepared t = prepare(Zi, yi, estimate_density(target.adjacency), cfg.transfer, 0);
  PooledProblem pooled;
  pooled.add(t);
  out.fit.sweeps = 0;
  out.fit.converged = true;
  for (Index l = 0; l <= L; ++l) {
    if (l > 0) {
      const Index k = out.candidates[l].back();
      pooled.add(prepare(ncr_design(sources[k]), sources[k].y, estimate_density(sources[k].adjacency), cfg.transfer,
                         static_cast<std::uint64_t>(k) + 1));
    }
    const TransferFit f = run_transfer(t, pooled, d, cfg.transfer);
    out.fit.sweeps += f.fit.sweeps;
    out.fit.converged = out.fit.converged && f.fit.converged;
    out.fit.kkt_gap = std::max(out.fit.kkt_gap, f.fit.kkt_gap);
    out.candidate_gammas.push_back(f.fit.gamma_hat);
  }

  out.validation_risk.resize(L + 1);
  for (Index l = 0; l <= L; ++l) out.validation_risk(l) = empirical_risk(out.candidate_gammas[l], Zv.Z(), yv);
  out.weights = q_aggregate(out.candidate_gammas, Zv.Z(), yv, target.X.rows(), cfg.aggregation);

  out.fit.gamma_hat = Vector::Zero(2 * d);
  for (Index l = 0; l <= L; ++l) out.fit.gamma_hat += out.weights.theta(l) * out.candidate_gammas[l];
  out.fit.objective = out.weights.objective;
  out.fit.lambda_used = std::numeric_limits<double>::quiet_NaN();
  return out;
}

}  // namespace ncr
