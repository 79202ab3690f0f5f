#include "ncr/transfer.hpp"

#include <algorithm>
#include <cmath>

namespace ncr {

void TransferConfig::validate() const {
  if (const auto* g = std::get_if<TheoreticalGamma>(&lambda_gamma)) {
    require(g->c1 > 0.0, "lambda_gamma.c1 must be > 0");
    require(g->c2 >= 0.0, "lambda_gamma.c2 must be >= 0");
    require(g->h >= 0.0, "lambda_gamma.h must be >= 0");
  }
  if (const auto* r = std::get_if<TheoreticalDelta>(&lambda_delta)) require(r->c3 > 0.0, "lambda_delta.c3 must be > 0");
  require(cv.folds >= 2, "cv.folds must be >= 2");
  cv.lasso.validate();
}

ContrastVector ContrastVector::from(Vector delta) {
  const double l1 = delta.lpNorm<1>();
  return {std::move(delta), l1};
}

std::vector<Index> transferable_set(std::span<const ContrastVector> contrasts, double h) {
  std::vector<Index> out;
  for (std::size_t k = 0; k < contrasts.size(); ++k) {
    if (contrasts[k].l1_norm <= h) out.push_back(static_cast<Index>(k));
  }
  return out;
}

double lambda_gamma_theoretical(Index n, Index d, std::span<const Index> n_k, std::span<const double> p_k, double h,
                                double c1, double c2) {
  require(n_k.size() == p_k.size(), "lambda_gamma: n_k and p_k lengths differ");
  require(h >= 0.0, "lambda_gamma: h must be >= 0");
  const double base = theoretical_lambda(n, d, c1);
  if (h == 0.0 || c2 == 0.0) return base;
  const double logd = std::log(static_cast<double>(d));
  double spread = 0.0;
  double worst = 0.0;
  for (std::size_t k = 0; k < n_k.size(); ++k) {
    require(n_k[k] >= 1, "lambda_gamma: every n_k must be >= 1");
    require(p_k[k] >= 0.0 && p_k[k] <= 1.0, "lambda_gamma: every p_k must lie in [0, 1]");
    const double nk = static_cast<double>(n_k[k]);
    spread += nk + nk * nk * p_k[k] * p_k[k];
    worst = std::max(worst, nk * p_k[k]);
  }
  const double nn = static_cast<double>(n);
  return base + c2 * h * std::max(std::sqrt(logd * spread) / nn, logd * worst / nn);
}

DesignMatrix ncr_design(const DomainData& domain) {
  if (domain.adjacency.size() != domain.X.rows() || domain.X.rows() != domain.y.size()) {
    throw DimensionMismatch("domain: adjacency, X and y disagree on the node count");
  }
  return build_design(normalize(domain.adjacency), domain.X);
}

Prepared prepare(const DesignMatrix& Zd, const Vector& y, double density, const TransferConfig& cfg,
                 std::uint64_t stream) {
  Rng rng = make_rng(cfg.seed, stream);
  return Prepared{make_cv_problem(Zd, y, cfg.cv.folds, rng), density};
}

void PooledProblem::add(const Prepared& domain) {
  problem += domain.problem;
  sizes.push_back(domain.n());
  densities.push_back(domain.density);
}

namespace {

FitResult penalized(const CvProblem& problem, const std::optional<double>& lambda, const CvConfig& cv) {
  if (!lambda) return cv_lasso(problem, cv).fit;
  LassoConfig c = cv.lasso;
  c.lambda = *lambda;
  return lasso_moments(problem.full, c);
}

std::optional<double> gamma_lambda(const PooledProblem& pooled, Index d, const TransferConfig& cfg) {
  const auto* g = std::get_if<TheoreticalGamma>(&cfg.lambda_gamma);
  if (!g) return std::nullopt;
  return lambda_gamma_theoretical(pooled.problem.full.n, d, pooled.sizes, pooled.densities, g->h, g->c1, g->c2);
}

Prepared prepare_self(const DomainData& domain, const TransferConfig& cfg, std::uint64_t stream) {
  if (domain.X.rows() != domain.y.size()) throw DimensionMismatch("domain: X and y disagree on the row count");
  return prepare(build_design(domain.X), domain.y, 0.0, cfg, stream);
}

Prepared prepare_ncr(const DomainData& domain, const TransferConfig& cfg, std::uint64_t stream) {
  return prepare(ncr_design(domain), domain.y, estimate_density(domain.adjacency), cfg, stream);
}

TransferFit pad(TransferFit f) {
  f.fit.gamma_hat = pad_network_block(f.fit.gamma_hat);
  f.transfer_step.gamma_hat = pad_network_block(f.transfer_step.gamma_hat);
  f.debias_step.gamma_hat = pad_network_block(f.debias_step.gamma_hat);
  return f;
}

}  // namespace

TransferFit run_transfer(const Prepared& target, const PooledProblem& pooled, Index d, const TransferConfig& cfg) {
  cfg.validate();
  TransferFit out;
  out.transfer_step = penalized(pooled.problem, gamma_lambda(pooled, d, cfg), cfg.cv);
  const CvProblem residual = target.problem.with_offset(out.transfer_step.gamma_hat);
  std::optional<double> lambda_delta;
  if (const auto* r = std::get_if<TheoreticalDelta>(&cfg.lambda_delta)) {
    lambda_delta = theoretical_lambda(target.n(), d, r->c3);
  }
  out.debias_step = penalized(residual, lambda_delta, cfg.cv);
  out.fit = out.debias_step;
  out.fit.gamma_hat = out.transfer_step.gamma_hat + out.debias_step.gamma_hat;
  out.fit.sweeps = out.transfer_step.sweeps + out.debias_step.sweeps;
  out.fit.converged = out.transfer_step.converged && out.debias_step.converged;
  out.fit.objective_trace.clear();
  return out;
}

FitResult fit_single(const Prepared& domain, Index d, const TransferConfig& cfg) {
  cfg.validate();
  PooledProblem pooled;
  pooled.add(domain);
  return penalized(domain.problem, gamma_lambda(pooled, d, cfg), cfg.cv);
}

TransferFit oracle_trans_ncr(const DomainData& target, std::span<const DomainData> sources, const TransferConfig& cfg) {
  cfg.validate();
  const Prepared t = prepare_ncr(target, cfg, 0);
  PooledProblem pooled;
  pooled.add(t);
  for (std::size_t k = 0; k < sources.size(); ++k) {
    if (sources[k].X.cols() != target.X.cols()) throw DimensionMismatch("source feature dimension differs from target");
    pooled.add(prepare_ncr(sources[k], cfg, k + 1));
  }
  return run_transfer(t, pooled, target.X.cols(), cfg);
}

FitResult target_only_ncr(const DomainData& target, const TransferConfig& cfg) {
  return fit_single(prepare_ncr(target, cfg, 0), target.X.cols(), cfg);
}

FitResult target_only_lasso(const DomainData& target, const TransferConfig& cfg) {
  FitResult f = fit_single(prepare_self(target, cfg, 0), target.X.cols(), cfg);
  f.gamma_hat = pad_network_block(f.gamma_hat);
  return f;
}

TransferFit trans_lasso_baseline(const DomainData& target, std::span<const DomainData> sources,
                                 const TransferConfig& cfg) {
  cfg.validate();
  const Prepared t = prepare_self(target, cfg, 0);
  PooledProblem pooled;
  pooled.add(t);
  for (std::size_t k = 0; k < sources.size(); ++k) {
    if (sources[k].X.cols() != target.X.cols()) throw DimensionMismatch("source feature dimension differs from target");
    pooled.add(prepare_self(sources[k], cfg, k + 1));
  }
  return pad(run_transfer(t, pooled, target.X.cols(), cfg));
}

Vector pad_network_block(const Vector& self_block) {
  Vector g = Vector::Zero(2 * self_block.size());
  g.tail(self_block.size()) = self_block;
  return g;
}

}  // namespace ncr
