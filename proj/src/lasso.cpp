#include "ncr/lasso.hpp"

#include "ncr/kernels.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace ncr {

void LassoConfig::validate() const {
  require(tol > 0.0, "lasso.tol must be > 0");
  require(max_sweeps >= 1, "lasso.max_sweeps must be >= 1");
  require(lambda >= 0.0 && std::isfinite(lambda), "lasso.lambda must be finite and >= 0");
  require(kkt_tol > 0.0, "lasso.kkt_tol must be > 0");
}

double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

namespace {

// Subgradient violation given the scaled gradient g_j / n.
double kkt_violation(double grad, double coef, double lambda) {
  if (coef == 0.0) return std::max(0.0, std::abs(grad) - lambda);
  return std::abs(grad - (coef > 0.0 ? lambda : -lambda));
}

constexpr int kPolishEvery = 8;

// Shared pass schedule: full pass, then active-set passes until they settle,
// then a confirming full pass whose KKT certificate must hold.
template <class Engine>
void run_schedule(Engine& eng, const LassoConfig& cfg, FitResult& res) {
  const Index p = eng.width();
  std::vector<Index> all(static_cast<std::size_t>(p));
  std::iota(all.begin(), all.end(), Index{0});
  std::vector<Index> active;
  res.sweeps = 0;
  res.converged = false;
  while (res.sweeps < cfg.max_sweeps) {
    const double full_change = eng.pass(all);
    ++res.sweeps;
    if (cfg.record_trace) res.objective_trace.push_back(eng.objective());
    if (full_change < cfg.tol) {
      eng.refresh();
      if (eng.kkt() <= cfg.kkt_tol) {
        res.converged = true;
        break;
      }
      continue;
    }
    active.clear();
    for (Index j = 0; j < p; ++j) {
      if (eng.coef(j) != 0.0) active.push_back(j);
    }
    eng.begin_active(active);
    int since_polish = 0;
    while (res.sweeps < cfg.max_sweeps) {
      const double change = eng.pass_active();
      ++res.sweeps;
      if (cfg.record_trace) res.objective_trace.push_back(eng.objective());
      if (change < cfg.tol) break;
      if (++since_polish == kPolishEvery) {
        since_polish = 0;
        eng.polish();
      }
    }
    eng.end_active();
  }
  eng.refresh();
  res.kkt_gap = eng.kkt();
  res.objective = eng.objective();
}

class ResidualEngine {
 public:
  ResidualEngine(const Matrix& Z, const Vector& y, const Vector& sq, double lambda, Vector gamma)
      : Z_(Z), y_(y), sq_(sq), lambda_(lambda), n_(static_cast<double>(Z.rows())), gamma_(std::move(gamma)) {
    refresh();
  }

  Index width() const { return gamma_.size(); }
  double coef(Index j) const { return gamma_(j); }
  const Vector& gamma() const { return gamma_; }

  double pass(const std::vector<Index>& coords) {
    double max_change = 0.0;
    for (Index j : coords) {
      const double c = sq_(j);
      if (c <= 0.0) continue;
      const double z = Z_.col(j).dot(r_) / n_ + c * gamma_(j);
      const double next = soft_threshold(z, lambda_) / c;
      const double delta = next - gamma_(j);
      if (delta != 0.0) {
        r_.noalias() -= delta * Z_.col(j);
        gamma_(j) = next;
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    return max_change;
  }

  void refresh() { r_ = y_ - Z_ * gamma_; }

  void begin_active(const std::vector<Index>& active) { active_ = active; }
  double pass_active() { return pass(active_); }
  void polish() {}
  void end_active() {}

  double kkt() const {
    const Vector grad = kernels::parallel::cross_product(Z_, r_) / n_;
    double worst = 0.0;
    for (Index j = 0; j < gamma_.size(); ++j) worst = std::max(worst, kkt_violation(grad(j), gamma_(j), lambda_));
    return worst;
  }

  double objective() const { return r_.squaredNorm() / (2.0 * n_) + lambda_ * gamma_.lpNorm<1>(); }

 private:
  const Matrix& Z_;
  const Vector& y_;
  const Vector& sq_;
  double lambda_;
  double n_;
  Vector gamma_;
  Vector r_;
  std::vector<Index> active_;
};

// Keeps g = b - G gamma, so the coordinate gradient is g_j / n. Active-set
// passes work on the active block of G only and resync g afterwards.
class GramEngine {
 public:
  GramEngine(const Moments& m, double lambda, Vector gamma)
      : m_(m), lambda_(lambda), n_(static_cast<double>(m.n)), gamma_(std::move(gamma)) {
    refresh();
  }

  Index width() const { return gamma_.size(); }
  double coef(Index j) const { return gamma_(j); }
  const Vector& gamma() const { return gamma_; }

  double pass(const std::vector<Index>& coords) {
    double max_change = 0.0;
    for (Index j : coords) {
      const double c = m_.gram(j, j) / n_;
      if (c <= 0.0) continue;
      const double z = g_(j) / n_ + c * gamma_(j);
      const double next = soft_threshold(z, lambda_) / c;
      const double delta = next - gamma_(j);
      if (delta != 0.0) {
        g_.noalias() -= delta * m_.gram.col(j);
        gamma_(j) = next;
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    return max_change;
  }

  void begin_active(const std::vector<Index>& active) {
    active_ = active;
    const Index a = static_cast<Index>(active_.size());
    block_.resize(a, a);
    ga_.resize(a);
    for (Index c = 0; c < a; ++c) {
      ga_(c) = g_(active_[c]);
      for (Index r = 0; r < a; ++r) block_(r, c) = m_.gram(active_[r], active_[c]);
    }
    in_active_ = true;
  }

  double pass_active() {
    double max_change = 0.0;
    for (Index c = 0; c < static_cast<Index>(active_.size()); ++c) {
      const Index j = active_[c];
      const double diag = block_(c, c) / n_;
      if (diag <= 0.0) continue;
      const double z = ga_(c) / n_ + diag * gamma_(j);
      const double next = soft_threshold(z, lambda_) / diag;
      const double delta = next - gamma_(j);
      if (delta != 0.0) {
        ga_.noalias() -= delta * block_.col(c);
        gamma_(j) = next;
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    return max_change;
  }

  // Jumps to the minimizer over the current orthant of the nonzero active
  // coordinates when that minimizer keeps every sign.
  void polish() {
    std::vector<Index> pos;
    for (Index c = 0; c < static_cast<Index>(active_.size()); ++c) {
      if (gamma_(active_[c]) != 0.0) pos.push_back(c);
    }
    const Index a = static_cast<Index>(pos.size());
    if (a == 0 || a > m_.n) return;
    Matrix H(a, a);
    Vector rhs(a);
    for (Index r = 0; r < a; ++r) {
      const double coef = gamma_(active_[pos[r]]);
      rhs(r) = m_.zty(active_[pos[r]]) - n_ * (coef > 0.0 ? lambda_ : -lambda_);
      for (Index c = 0; c < a; ++c) H(r, c) = block_(pos[r], pos[c]);
    }
    Eigen::LLT<Matrix> llt(H);
    if (llt.info() != Eigen::Success) return;
    const Vector x = llt.solve(rhs);
    if (!x.allFinite()) return;
    for (Index r = 0; r < a; ++r) {
      if ((x(r) > 0.0) != (gamma_(active_[pos[r]]) > 0.0) || x(r) == 0.0) return;
    }
    const double before = objective();
    Vector saved_ga = ga_;
    Vector saved(a);
    for (Index r = 0; r < a; ++r) {
      const Index c = pos[r];
      const Index j = active_[c];
      saved(r) = gamma_(j);
      const double delta = x(r) - gamma_(j);
      if (delta != 0.0) ga_.noalias() -= delta * block_.col(c);
      gamma_(j) = x(r);
    }
    if (objective() > before) {
      ga_ = saved_ga;
      for (Index r = 0; r < a; ++r) gamma_(active_[pos[r]]) = saved(r);
    }
  }

  void end_active() {
    in_active_ = false;
    refresh();
  }

  void refresh() {
    g_ = m_.zty;
    for (Index j = 0; j < gamma_.size(); ++j) {
      if (gamma_(j) != 0.0) g_.noalias() -= gamma_(j) * m_.gram.col(j);
    }
  }

  double kkt() const {
    double worst = 0.0;
    for (Index j = 0; j < gamma_.size(); ++j) worst = std::max(worst, kkt_violation(g_(j) / n_, gamma_(j), lambda_));
    return worst;
  }

  // y^T y - gamma^T b - gamma^T g; only nonzero coordinates contribute.
  double objective() const {
    double rss = m_.yty;
    if (in_active_) {
      for (std::size_t c = 0; c < active_.size(); ++c) {
        const Index j = active_[c];
        rss -= gamma_(j) * (m_.zty(j) + ga_(static_cast<Index>(c)));
      }
    } else {
      rss -= gamma_.dot(m_.zty) + gamma_.dot(g_);
    }
    return std::max(rss, 0.0) / (2.0 * n_) + lambda_ * gamma_.lpNorm<1>();
  }

 private:
  const Moments& m_;
  double lambda_;
  double n_;
  Vector gamma_;
  Vector g_;
  std::vector<Index> active_;
  Matrix block_;
  Vector ga_;
  bool in_active_ = false;
};

Vector initial_gamma(Index width, const std::optional<Vector>& warm) {
  if (!warm) return Vector::Zero(width);
  if (warm->size() != width) throw DimensionMismatch("lasso: warm start has wrong length");
  return *warm;
}

// Column scales sqrt(mean square); zero columns keep scale 1.
Vector column_scales(const Vector& mean_sq) {
  Vector s(mean_sq.size());
  for (Index j = 0; j < s.size(); ++j) s(j) = mean_sq(j) > 0.0 ? std::sqrt(mean_sq(j)) : 1.0;
  return s;
}

}  // namespace

FitResult lasso_cd(const DesignMatrix& Zd, const Vector& y, const LassoConfig& cfg,
                   const std::optional<Vector>& warm_start) {
  cfg.validate();
  if (Zd.rows() != y.size()) throw DimensionMismatch("lasso_cd: response length differs from design rows");
  require(Zd.rows() >= 1, "lasso_cd: empty design");
  FitResult res;
  res.lambda_used = cfg.lambda;
  Vector gamma = initial_gamma(Zd.cols(), warm_start);
  if (!cfg.standardize) {
    ResidualEngine eng(Zd.Z(), y, Zd.column_sq_norms(), cfg.lambda, std::move(gamma));
    run_schedule(eng, cfg, res);
    res.gamma_hat = eng.gamma();
    return res;
  }
  const Vector s = column_scales(Zd.column_sq_norms());
  const Matrix Zs = Zd.Z() * s.cwiseInverse().asDiagonal();
  Vector sq(Zd.cols());
  for (Index j = 0; j < sq.size(); ++j) sq(j) = Zd.column_sq_norms()(j) > 0.0 ? 1.0 : 0.0;
  ResidualEngine eng(Zs, y, sq, cfg.lambda, gamma.cwiseProduct(s));
  run_schedule(eng, cfg, res);
  res.gamma_hat = eng.gamma().cwiseQuotient(s);
  return res;
}

FitResult lasso_moments(const Moments& m, const LassoConfig& cfg, const std::optional<Vector>& warm_start) {
  cfg.validate();
  require(m.n >= 1, "lasso: no rows");
  if (m.gram.rows() != m.width() || m.gram.cols() != m.width()) throw DimensionMismatch("lasso: malformed moments");
  FitResult res;
  res.lambda_used = cfg.lambda;
  Vector gamma = initial_gamma(m.width(), warm_start);
  if (!cfg.standardize) {
    GramEngine eng(m, cfg.lambda, std::move(gamma));
    run_schedule(eng, cfg, res);
    res.gamma_hat = eng.gamma();
    return res;
  }
  const Vector s = column_scales(m.gram.diagonal() / static_cast<double>(m.n));
  const Vector inv = s.cwiseInverse();
  Moments scaled{inv.asDiagonal() * m.gram * inv.asDiagonal(), m.zty.cwiseProduct(inv), m.yty, m.n};
  GramEngine eng(scaled, cfg.lambda, gamma.cwiseProduct(s));
  run_schedule(eng, cfg, res);
  res.gamma_hat = eng.gamma().cwiseQuotient(s);
  return res;
}

double lambda_max(const Moments& m) {
  require(m.n >= 1, "lambda_max: no rows");
  return m.width() == 0 ? 0.0 : m.zty.cwiseAbs().maxCoeff() / static_cast<double>(m.n);
}

double lambda_max(const DesignMatrix& Zd, const Vector& y) {
  if (Zd.rows() != y.size()) throw DimensionMismatch("lambda_max: response length differs from design rows");
  require(Zd.rows() >= 1, "lambda_max: no rows");
  const Vector c = kernels::parallel::cross_product(Zd.Z(), y);
  return c.size() == 0 ? 0.0 : c.cwiseAbs().maxCoeff() / static_cast<double>(Zd.rows());
}

double theoretical_lambda(Index n, Index d, double c) {
  require(n >= 1, "theoretical_lambda: n must be >= 1");
  require(d >= 2, "theoretical_lambda: d must be >= 2");
  require(c >= 0.0, "theoretical_lambda: c must be >= 0");
  return c * std::sqrt(std::log(static_cast<double>(d)) / static_cast<double>(n));
}

CvProblem& CvProblem::operator+=(const CvProblem& other) {
  if (heldout.empty() && full.n == 0) return *this = other;
  if (other.folds() != folds()) throw DimensionMismatch("cv: fold counts differ");
  full += other.full;
  for (int f = 0; f < folds(); ++f) heldout[f] += other.heldout[f];
  return *this;
}

CvProblem CvProblem::with_offset(const Vector& offset) const {
  CvProblem out{full.with_offset(offset), {}};
  out.heldout.reserve(heldout.size());
  for (const auto& h : heldout) out.heldout.push_back(h.with_offset(offset));
  return out;
}

CvProblem CvProblem::columns(Index first, Index width) const {
  CvProblem out{full.columns(first, width), {}};
  out.heldout.reserve(heldout.size());
  for (const auto& h : heldout) out.heldout.push_back(h.columns(first, width));
  return out;
}

std::vector<int> fold_assignment(Index n, int folds, Rng& rng) {
  require(folds >= 2, "cv: folds must be >= 2");
  require(n >= folds, "cv: need at least as many rows as folds");
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<int> fold(static_cast<std::size_t>(n));
  for (Index pos = 0; pos < n; ++pos) fold[perm[pos]] = static_cast<int>(pos % folds);
  return fold;
}

CvProblem make_cv_problem(const DesignMatrix& Zd, const Vector& y, const std::vector<int>& assignment, int folds) {
  if (Zd.rows() != y.size()) throw DimensionMismatch("cv: response length differs from design rows");
  if (static_cast<Index>(assignment.size()) != Zd.rows()) throw DimensionMismatch("cv: fold assignment length");
  std::vector<std::vector<Index>> rows(static_cast<std::size_t>(folds));
  for (Index i = 0; i < Zd.rows(); ++i) {
    const int f = assignment[i];
    require(f >= 0 && f < folds, "cv: fold index out of range");
    rows[f].push_back(i);
  }
  CvProblem out;
  for (int f = 0; f < folds; ++f) {
    out.heldout.push_back(compute_moments(Zd, y, rows[f]));
    out.full += out.heldout.back();
  }
  return out;
}

CvProblem make_cv_problem(const DesignMatrix& Zd, const Vector& y, int folds, Rng& rng) {
  return make_cv_problem(Zd, y, fold_assignment(Zd.rows(), folds, rng), folds);
}

std::vector<double> lambda_grid(double lmax, int grid_size, double min_ratio) {
  require(grid_size >= 1, "cv: grid_size must be >= 1");
  require(min_ratio > 0.0 && min_ratio < 1.0, "cv: min_ratio must lie in (0, 1)");
  require(lmax > 0.0, "cv: lambda_max must be > 0");
  std::vector<double> grid(static_cast<std::size_t>(grid_size));
  for (int k = 0; k < grid_size; ++k) {
    const double t = grid_size == 1 ? 0.0 : static_cast<double>(k) / (grid_size - 1);
    grid[k] = lmax * std::pow(min_ratio, t);
  }
  return grid;
}

CvFit cv_lasso(const CvProblem& problem, const CvConfig& cfg) {
  cfg.lasso.validate();
  require(problem.folds() >= 2, "cv: at least two folds required");
  require(cfg.max_explained > 0.0 && cfg.max_explained <= 1.0, "cv: max_explained must lie in (0, 1]");
  const Moments& full = problem.full;
  const Index p = full.width();
  CvFit out;
  const double lmax = lambda_max(full);
  if (!(lmax > 0.0)) {
    // y orthogonal to every column: the zero vector solves every lambda.
    LassoConfig c = cfg.lasso;
    c.lambda = 0.0;
    out.fit = lasso_moments(full, c);
    out.fit.gamma_hat.setZero();
    out.lambdas = {0.0};
    double err = 0.0;
    for (const auto& h : problem.heldout) err += h.yty;
    out.cv_error = {err / static_cast<double>(full.n)};
    return out;
  }
  const std::vector<double> grid = lambda_grid(lmax, cfg.grid_size, cfg.min_ratio);

  std::vector<Moments> train;
  std::vector<Vector> fold_warm;
  Index heldout_rows = 0;
  for (const auto& h : problem.heldout) {
    heldout_rows += h.n;
    train.push_back(full);
    train.back() -= h;
    require(train.back().n >= 1, "cv: a training split is empty");
    fold_warm.push_back(Vector::Zero(p));
  }

  Vector warm = Vector::Zero(p);
  double explained_prev = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    LassoConfig c = cfg.lasso;
    c.lambda = grid[k];
    FitResult r = lasso_moments(full, c, warm);
    warm = r.gamma_hat;
    out.max_path_kkt = std::max(out.max_path_kkt, r.kkt_gap);
    double err = 0.0;
    for (std::size_t f = 0; f < train.size(); ++f) {
      FitResult rf = lasso_moments(train[f], c, fold_warm[f]);
      fold_warm[f] = rf.gamma_hat;
      out.max_path_kkt = std::max(out.max_path_kkt, rf.kkt_gap);
      err += problem.heldout[f].residual_ss(rf.gamma_hat);
    }
    out.lambdas.push_back(grid[k]);
    out.cv_error.push_back(err / static_cast<double>(heldout_rows));
    if (k == 0 || out.cv_error[k] < out.cv_error[static_cast<std::size_t>(out.best)]) {
      out.best = static_cast<Index>(k);
      out.fit = r;
    }

    const double explained = full.yty > 0.0 ? 1.0 - full.residual_ss(r.gamma_hat) / full.yty : 0.0;
    if (explained >= cfg.max_explained) break;
    if (static_cast<int>(k) >= cfg.min_path && explained - explained_prev < cfg.min_explained_gain * explained) break;
    if (cfg.patience > 0 && static_cast<Index>(k) - out.best >= cfg.patience) break;
    explained_prev = explained;
  }
  return out;
}

CvFit cv_lasso(const DesignMatrix& Zd, const Vector& y, const CvConfig& cfg, Rng& rng) {
  return cv_lasso(make_cv_problem(Zd, y, cfg.folds, rng), cfg);
}

}  // namespace ncr
