#include "ncr/synth.hpp"

#include <cmath>
#include <string>

namespace ncr {

Matrix CovSpec::covariance() const {
  Matrix S(d, d);
  for (Index i = 0; i < d; ++i) {
    for (Index j = 0; j < d; ++j) S(i, j) = std::pow(rho, static_cast<double>(std::abs(i - j)));
  }
  return S;
}

Vector CoefficientVector::gamma() const {
  Vector g(beta0.size() + beta1.size());
  g << beta0, beta1;
  return g;
}

CoefficientVector CoefficientVector::from_gamma(const Vector& gamma) {
  require(gamma.size() % 2 == 0, "coefficient vector must have even length 2d");
  const Index d = gamma.size() / 2;
  return {gamma.head(d), gamma.tail(d)};
}

void ScenarioSpec::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw InvalidArgument("scenario." + field + ": " + why);
  };
  if (n0 < 4) fail("n0", "must be >= 4");
  if (d < 16) fail("d", "must be >= 16");
  if (!(rho >= 0.0 && rho < 1.0)) fail("rho", "must lie in [0, 1)");
  if (!(sigma >= 0.0)) fail("sigma", "must be >= 0");
  if (shifts.size() != source_sizes.size()) fail("shifts", "length must equal source_sizes");
  if (source_graphs.size() != source_sizes.size()) fail("source_graphs", "length must equal source_sizes");
  if (transferable_count < 0 || transferable_count > source_count()) {
    fail("transferable_count", "must lie in [0, K]");
  }
  for (Index n : source_sizes) {
    if (n < 2) fail("source_sizes", "every source needs >= 2 nodes");
  }
  auto check_graph = [&](const GraphModel& g, const std::string& field) {
    if (const auto* er = std::get_if<ErModel>(&g)) {
      if (!(er->p > 0.0 && er->p <= 1.0)) fail(field, "ER p must lie in (0, 1]");
    } else {
      const auto& sbm = std::get<SbmModel>(g);
      if (!(sbm.p_out >= 0.0 && sbm.p_out <= sbm.p_in && sbm.p_in <= 1.0 && sbm.p_in > 0.0)) {
        fail(field, "SBM needs 0 <= p_out <= p_in <= 1 and p_in > 0");
      }
    }
  };
  check_graph(target_graph, "target_graph");
  for (const auto& g : source_graphs) check_graph(g, "source_graphs");
}

namespace {

ScenarioSpec default_with(const GraphModel& model) {
  ScenarioSpec s;
  s.n0 = 150;
  s.d = 500;
  s.target_graph = model;
  s.source_sizes.assign(10, 500);
  s.source_graphs.assign(10, model);
  s.shifts = {0.1, 0.1, 0.1, 0.1, 0.1, 10, 10, 10, 10, 10};
  s.transferable_count = 5;
  return s;
}

}  // namespace

ScenarioSpec ScenarioSpec::er_default() { return default_with(ErModel{0.05}); }
ScenarioSpec ScenarioSpec::sbm_default() { return default_with(SbmModel{0.1, 0.05}); }

Matrix gen_covariates(Index n, const CovSpec& spec, Rng& rng) {
  require(n >= 1 && spec.d >= 1, "gen_covariates: n >= 1 and d >= 1 required");
  require(spec.rho >= 0.0 && spec.rho < 1.0, "gen_covariates: rho must lie in [0, 1)");
  std::normal_distribution<double> normal(0.0, 1.0);
  const double innov = std::sqrt(1.0 - spec.rho * spec.rho);
  Matrix X(n, spec.d);
  for (Index i = 0; i < n; ++i) {
    X(i, 0) = normal(rng);
    for (Index j = 1; j < spec.d; ++j) X(i, j) = spec.rho * X(i, j - 1) + innov * normal(rng);
  }
  return X;
}

CoefficientVector build_target_coefficients(Index d) {
  if (d < 16) throw InvalidArgument("build_target_coefficients: d must be >= 16");
  CoefficientVector c{Vector::Zero(d), Vector::Zero(d)};
  c.beta0.head(16).setConstant(0.3);
  c.beta1.head(16).setConstant(0.4);
  return c;
}

CoefficientVector build_source_coefficients(const CoefficientVector& target, double delta, SourceSelfBase base) {
  const Index d = target.dim();
  require(d >= 8, "build_source_coefficients: d must be >= 8");
  Vector shift = Vector::Zero(d);
  shift.head(8).setConstant(delta);
  CoefficientVector c;
  c.beta0 = target.beta0 - shift;
  c.beta1 = (base == SourceSelfBase::TargetNetwork ? target.beta0 : target.beta1) - shift;
  return c;
}

Vector gen_response(const NormalizedAdjacency& Astar, const Matrix& X, const CoefficientVector& gamma,
                    double sigma, Rng& rng) {
  if (Astar.size() != X.rows() || gamma.beta0.size() != X.cols() || gamma.beta1.size() != X.cols()) {
    throw DimensionMismatch("gen_response: A* is " + std::to_string(Astar.size()) + ", X is " +
                            std::to_string(X.rows()) + "x" + std::to_string(X.cols()) + ", gamma has d = " +
                            std::to_string(gamma.beta0.size()));
  }
  Vector y = Astar.apply(X * gamma.beta0) + X * gamma.beta1;
  if (sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, sigma);
    for (Index i = 0; i < y.size(); ++i) y(i) += noise(rng);
  }
  return y;
}

AdjacencyMatrix gen_graph(const GraphModel& model, Index n, bool symmetric, Rng& rng) {
  if (const auto* er = std::get_if<ErModel>(&model)) return gen_er(n, er->p, symmetric, rng);
  const auto& sbm = std::get<SbmModel>(model);
  return gen_sbm(n, sbm.p_in, sbm.p_out, rng, symmetric);
}

double expected_density(const GraphModel& model, Index n) {
  if (const auto* er = std::get_if<ErModel>(&model)) return er->p;
  const auto& sbm = std::get<SbmModel>(model);
  return sbm_expected_density(n, sbm.p_in, sbm.p_out);
}

namespace {

DomainData make_domain(const ScenarioSpec& spec, const GraphModel& model, Index n, const CoefficientVector& truth,
                       std::uint64_t stream) {
  Rng rng = make_rng(spec.seed, stream);
  AdjacencyMatrix A = gen_graph(model, n, spec.symmetric, rng);
  Matrix X = gen_covariates(n, CovSpec{spec.d, spec.rho}, rng);
  const std::optional<double> density =
      spec.response_density == ResponseDensity::True ? std::optional<double>(expected_density(model, n)) : std::nullopt;
  Vector y = gen_response(normalize(A, density), X, truth, spec.sigma, rng);
  return DomainData{std::move(A), std::move(X), std::move(y), truth};
}

}  // namespace

Scenario build_scenario(const ScenarioSpec& spec) {
  spec.validate();
  const CoefficientVector target_truth = build_target_coefficients(spec.d);
  Scenario sc{make_domain(spec, spec.target_graph, spec.n0, target_truth, 0), {}};
  sc.sources.reserve(spec.source_sizes.size());
  for (std::size_t k = 0; k < spec.source_sizes.size(); ++k) {
    const auto truth = build_source_coefficients(target_truth, spec.shifts[k], spec.self_base);
    sc.sources.push_back(make_domain(spec, spec.source_graphs[k], spec.source_sizes[k], truth, k + 1));
  }
  return sc;
}

std::vector<Vector> source_contrasts(const Scenario& scenario) {
  const Vector g0 = scenario.target.truth.value().gamma();
  std::vector<Vector> out;
  for (const auto& s : scenario.sources) out.push_back(s.truth.value().gamma() - g0);
  return out;
}

}  // namespace ncr
