#include "ncr/cli.hpp"

#include "ncr/diagnostics.hpp"
#include "ncr/io.hpp"
#include "ncr/kernels.hpp"
#include "ncr/transfer.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

namespace ncr::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& where, const std::string& why) { throw ConfigError(where + ": " + why); }

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) bad(where, "expected an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) bad(where + "." + key, "unknown field");
  }
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) bad(where, "expected a number");
  return j.get<double>();
}

long long integer(const json& j, const std::string& where) {
  if (!j.is_number() || std::floor(j.get<double>()) != j.get<double>()) bad(where, "expected an integer");
  return j.get<long long>();
}

std::uint64_t parse_seed(const std::string& s, const std::string& where) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    bad(where, "expected a nonnegative integer, got \"" + s + "\"");
  }
  return v;
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    const auto a = tok.find_first_not_of(" \t");
    const auto b = tok.find_last_not_of(" \t");
    out.push_back(a == std::string::npos ? "" : tok.substr(a, b - a + 1));
  }
  return out;
}

std::vector<double> parse_values(const std::string& s, const std::string& where) {
  std::vector<double> out;
  for (const auto& tok : split_commas(s)) {
    double v = 0.0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (tok.empty() || res.ec != std::errc() || res.ptr != tok.data() + tok.size() || !std::isfinite(v)) {
      bad(where, "not a number: \"" + tok + "\"");
    }
    out.push_back(v);
  }
  if (out.empty()) bad(where, "expected a comma separated list");
  return out;
}

std::vector<Method> parse_methods(const std::string& s) {
  std::vector<Method> out;
  for (const auto& tok : split_commas(s)) out.push_back(parse_method(tok));
  return out;
}

}  // namespace

TransNcrConfig estimator_from_json(const json& j, const std::string& where) {
  check_keys(j, where, {"lambda_gamma", "lambda_delta", "folds", "grid_size", "c0", "t_star", "L", "lambda_theta"});
  TransNcrConfig cfg;
  if (j.contains("lambda_gamma")) {
    const std::string at = where + ".lambda_gamma";
    const json& g = j["lambda_gamma"];
    check_keys(g, at, {"rule", "c1", "c2", "h"});
    const std::string rule = g.value("rule", "cv");
    if (rule == "cv") {
      if (g.size() > (g.contains("rule") ? 1u : 0u)) bad(at, "c1, c2 and h need \"rule\": \"theoretical\"");
      cfg.transfer.lambda_gamma = CvRule{};
    } else if (rule == "theoretical") {
      TheoreticalGamma t;
      if (g.contains("c1")) t.c1 = number(g["c1"], at + ".c1");
      if (g.contains("c2")) t.c2 = number(g["c2"], at + ".c2");
      if (g.contains("h")) t.h = number(g["h"], at + ".h");
      cfg.transfer.lambda_gamma = t;
    } else {
      bad(at + ".rule", "expected \"cv\" or \"theoretical\"");
    }
  }
  if (j.contains("lambda_delta")) {
    const std::string at = where + ".lambda_delta";
    const json& g = j["lambda_delta"];
    check_keys(g, at, {"rule", "c3"});
    const std::string rule = g.value("rule", "cv");
    if (rule == "cv") {
      if (g.contains("c3")) bad(at, "c3 needs \"rule\": \"theoretical\"");
      cfg.transfer.lambda_delta = CvRule{};
    } else if (rule == "theoretical") {
      TheoreticalDelta t;
      if (g.contains("c3")) t.c3 = number(g["c3"], at + ".c3");
      cfg.transfer.lambda_delta = t;
    } else {
      bad(at + ".rule", "expected \"cv\" or \"theoretical\"");
    }
  }
  if (j.contains("folds")) cfg.transfer.cv.folds = static_cast<int>(integer(j["folds"], where + ".folds"));
  if (j.contains("grid_size")) cfg.transfer.cv.grid_size = static_cast<int>(integer(j["grid_size"], where + ".grid_size"));
  if (j.contains("c0")) cfg.c0 = number(j["c0"], where + ".c0");
  if (j.contains("t_star") && !j["t_star"].is_null()) cfg.t_star = integer(j["t_star"], where + ".t_star");
  if (j.contains("L") && !j["L"].is_null()) cfg.L = integer(j["L"], where + ".L");
  if (j.contains("lambda_theta")) cfg.aggregation.lambda_theta = number(j["lambda_theta"], where + ".lambda_theta");
  if (cfg.transfer.cv.grid_size < 1) bad(where + ".grid_size", "must be >= 1");
  try {
    cfg.validate();
  } catch (const InvalidArgument& e) {
    bad(where, e.what());
  }
  return cfg;
}

json estimator_to_json(const TransNcrConfig& cfg) {
  json j;
  if (const auto* g = std::get_if<TheoreticalGamma>(&cfg.transfer.lambda_gamma)) {
    j["lambda_gamma"] = {{"rule", "theoretical"}, {"c1", g->c1}, {"c2", g->c2}, {"h", g->h}};
  } else {
    j["lambda_gamma"] = {{"rule", "cv"}};
  }
  if (const auto* r = std::get_if<TheoreticalDelta>(&cfg.transfer.lambda_delta)) {
    j["lambda_delta"] = {{"rule", "theoretical"}, {"c3", r->c3}};
  } else {
    j["lambda_delta"] = {{"rule", "cv"}};
  }
  j["folds"] = cfg.transfer.cv.folds;
  j["grid_size"] = cfg.transfer.cv.grid_size;
  j["c0"] = cfg.c0;
  j["t_star"] = cfg.t_star ? json(*cfg.t_star) : json(nullptr);
  j["L"] = cfg.L ? json(*cfg.L) : json(nullptr);
  j["lambda_theta"] = cfg.aggregation.lambda_theta;
  return j;
}

std::vector<double> default_axis_values(Axis axis) {
  switch (axis) {
    case Axis::SourceSize: return {100, 300, 500, 700, 1000};
    case Axis::Shift: return {0.1, 0.2, 0.4, 0.6, 0.8, 1.0};
    case Axis::Density: return {0.03, 0.04, 0.05, 0.06, 0.07};
  }
  return {};
}

ExperimentGrid grid_from_json(const json& j) {
  check_keys(j, "config", {"scenario", "experiment", "estimator"});
  ExperimentGrid grid;
  grid.base = j.contains("scenario") ? io::scenario_from_json(j["scenario"]) : ScenarioSpec::er_default();
  if (j.contains("estimator")) grid.estimator = estimator_from_json(j["estimator"]);
  if (j.contains("experiment")) {
    const json& e = j["experiment"];
    check_keys(e, "experiment", {"axis", "values", "methods", "reps", "seed"});
    if (e.contains("axis")) {
      if (!e["axis"].is_string()) bad("experiment.axis", "expected a string");
      try {
        grid.axis = parse_axis(e["axis"].get<std::string>());
      } catch (const ConfigError& err) {
        bad("experiment.axis", err.what());
      }
    }
    if (e.contains("values")) {
      if (!e["values"].is_array() || e["values"].empty()) bad("experiment.values", "expected a nonempty array");
      for (std::size_t i = 0; i < e["values"].size(); ++i) {
        grid.axis_values.push_back(number(e["values"][i], "experiment.values[" + std::to_string(i) + "]"));
      }
    }
    if (e.contains("methods")) {
      if (!e["methods"].is_array() || e["methods"].empty()) bad("experiment.methods", "expected a nonempty array");
      for (std::size_t i = 0; i < e["methods"].size(); ++i) {
        const std::string at = "experiment.methods[" + std::to_string(i) + "]";
        if (!e["methods"][i].is_string()) bad(at, "expected a string");
        try {
          grid.methods.push_back(parse_method(e["methods"][i].get<std::string>()));
        } catch (const ConfigError& err) {
          bad(at, err.what());
        }
      }
    }
    if (e.contains("reps")) grid.reps = static_cast<int>(integer(e["reps"], "experiment.reps"));
    if (e.contains("seed")) {
      if (!e["seed"].is_number_unsigned() && !(e["seed"].is_number_integer() && e["seed"].get<long long>() >= 0)) {
        bad("experiment.seed", "expected a nonnegative integer");
      }
      grid.seed = e["seed"].get<std::uint64_t>();
    }
  }
  return grid;
}

json grid_to_json(const ExperimentGrid& grid) {
  json methods = json::array();
  for (Method m : grid.methods) methods.push_back(to_string(m));
  return json{{"scenario", io::scenario_to_json(grid.base)},
              {"experiment",
               {{"axis", to_string(grid.axis)},
                {"values", grid.axis_values},
                {"methods", methods},
                {"reps", grid.reps},
                {"seed", grid.seed}}},
              {"estimator", estimator_to_json(grid.estimator)}};
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const InvalidArgument*>(&e) ||
      dynamic_cast<const json::exception*>(&e)) {
    return kConfigError;
  }
  if (dynamic_cast<const DataError*>(&e) || dynamic_cast<const DimensionMismatch*>(&e) ||
      dynamic_cast<const EmptyGraph*>(&e) || dynamic_cast<const fs::filesystem_error*>(&e)) {
    return kDataError;
  }
  return kNumericalError;
}

namespace {

struct Common {
  std::uint64_t seed = 1;
  std::string seed_text;
  int threads = 0;
  CLI::Option* seed_opt = nullptr;
};

void add_common(CLI::App* app, Common& c) {
  c.seed_opt = app->add_option("--seed", c.seed_text, "Random seed (NCR_SEED overrides)");
  app->add_option("--threads", c.threads, "Worker threads (0 = available parallelism)")->check(CLI::NonNegativeNumber);
}

/// NCR_SEED, then --seed, then `fallback`.
std::uint64_t resolve_seed(const Common& c, std::uint64_t fallback) {
  if (const char* env = std::getenv("NCR_SEED"); env && *env) return parse_seed(env, "NCR_SEED");
  if (c.seed_opt->count()) return parse_seed(c.seed_text, "--seed");
  return fallback;
}

struct EstimatorFlags {
  std::string lambda_rule;
  double c1 = 1.0, c2 = 1.0, h = 0.0, c3 = 1.0;
  int folds = 5;
  int grid_size = 50;
  double c0 = 0.5;
  long long t_star = 0;
  long long L = 0;
  double lambda_theta = 1.0;
  CLI::Option *rule_opt = nullptr, *c1_opt = nullptr, *c2_opt = nullptr, *h_opt = nullptr, *c3_opt = nullptr,
              *folds_opt = nullptr, *grid_opt = nullptr, *c0_opt = nullptr, *t_star_opt = nullptr, *L_opt = nullptr,
              *theta_opt = nullptr;
};

void add_penalty_flags(CLI::App* app, EstimatorFlags& f) {
  f.rule_opt = app->add_option("--lambda-rule", f.lambda_rule, "Penalty rule for both lasso steps")
                   ->check(CLI::IsMember({"cv", "theoretical"}));
  f.c1_opt = app->add_option("--c1", f.c1, "Theoretical lambda_gamma: c1 sqrt(log d / n) term");
  f.c2_opt = app->add_option("--c2", f.c2, "Theoretical lambda_gamma: weight of the h term");
  f.h_opt = app->add_option("--h-level", f.h, "Theoretical lambda_gamma: transferability level h");
  f.c3_opt = app->add_option("--c3", f.c3, "Theoretical lambda_delta: c3 sqrt(log d / n0)");
  f.folds_opt = app->add_option("--folds", f.folds, "Cross-validation folds");
  f.grid_opt = app->add_option("--grid-size", f.grid_size, "Cross-validation lambda grid size");
}

void add_pipeline_flags(CLI::App* app, EstimatorFlags& f) {
  f.c0_opt = app->add_option("--c0", f.c0, "Fraction of target rows used for detection and candidate fits");
  f.t_star_opt = app->add_option("--t-star", f.t_star, "Screened coordinates per contrast (default ceil(|I|/3))");
  f.L_opt = app->add_option("--L", f.L, "Largest candidate set size (default: number of sources)");
  f.theta_opt = app->add_option("--lambda-theta", f.lambda_theta, "Entropy weight of the aggregation");
}

void apply_flags(const EstimatorFlags& f, TransNcrConfig& cfg) {
  if (f.rule_opt && f.rule_opt->count()) {
    if (f.lambda_rule == "cv") {
      cfg.transfer.lambda_gamma = CvRule{};
      cfg.transfer.lambda_delta = CvRule{};
    } else {
      if (!std::holds_alternative<TheoreticalGamma>(cfg.transfer.lambda_gamma)) {
        cfg.transfer.lambda_gamma = TheoreticalGamma{};
      }
      if (!std::holds_alternative<TheoreticalDelta>(cfg.transfer.lambda_delta)) {
        cfg.transfer.lambda_delta = TheoreticalDelta{};
      }
    }
  }
  auto* g = std::get_if<TheoreticalGamma>(&cfg.transfer.lambda_gamma);
  auto* r = std::get_if<TheoreticalDelta>(&cfg.transfer.lambda_delta);
  for (auto [opt, name] : {std::pair{f.c1_opt, "--c1"}, std::pair{f.c2_opt, "--c2"}, std::pair{f.h_opt, "--h-level"}}) {
    if (opt && opt->count() && !g) bad(name, "needs --lambda-rule theoretical");
  }
  if (f.c3_opt && f.c3_opt->count() && !r) bad("--c3", "needs --lambda-rule theoretical");
  if (f.c1_opt && f.c1_opt->count()) g->c1 = f.c1;
  if (f.c2_opt && f.c2_opt->count()) g->c2 = f.c2;
  if (f.h_opt && f.h_opt->count()) g->h = f.h;
  if (f.c3_opt && f.c3_opt->count()) r->c3 = f.c3;
  if (f.folds_opt && f.folds_opt->count()) cfg.transfer.cv.folds = f.folds;
  if (f.grid_opt && f.grid_opt->count()) {
    if (f.grid_size < 1) bad("--grid-size", "must be >= 1");
    cfg.transfer.cv.grid_size = f.grid_size;
  }
  if (f.c0_opt && f.c0_opt->count()) cfg.c0 = f.c0;
  if (f.t_star_opt && f.t_star_opt->count()) cfg.t_star = f.t_star;
  if (f.L_opt && f.L_opt->count()) cfg.L = f.L;
  if (f.theta_opt && f.theta_opt->count()) cfg.aggregation.lambda_theta = f.lambda_theta;
  try {
    cfg.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
}

void write_file(const fs::path& path, const std::string& text, std::ostream& out) {
  io::write_text(path, text);
  out << "wrote " << path.string() << '\n';
}

void ensure_dir(const fs::path& dir) {
  if (!dir.empty()) fs::create_directories(dir);
}

// simulate

struct SimulateArgs {
  Common common;
  EstimatorFlags est;
  std::string config;
  std::string preset;
  std::string axis;
  std::string values;
  std::string methods;
  int reps = 20;
  CLI::Option* reps_opt = nullptr;
  std::string out_dir = ".";
  bool plot = false;
  bool timing = false;
  bool save_coefficients = false;
  std::string dump;
};

void dump_scenario(const fs::path& dir, const Scenario& sc, const json& meta) {
  fs::create_directories(dir);
  auto write_domain = [&](const DomainData& d, const std::string& stem) {
    std::ofstream g(dir / (stem + ".edges"));
    io::write_edge_list(g, d.adjacency);
    std::ofstream x(dir / (stem + "_X.csv"));
    io::write_matrix_csv(x, d.X);
    std::ofstream y(dir / (stem + "_y.csv"));
    io::write_vector_csv(y, d.y);
    if (!g || !x || !y) throw DataError((dir / stem).string() + ": write failed");
  };
  write_domain(sc.target, "target");
  for (std::size_t k = 0; k < sc.sources.size(); ++k) write_domain(sc.sources[k], "source_" + std::to_string(k + 1));
  std::ofstream t(dir / "gamma_true.csv");
  io::write_vector_csv(t, sc.target.truth.value().gamma());
  io::write_text(dir / "cell.json", meta.dump(2) + "\n");
}

int cmd_simulate(SimulateArgs& a, std::ostream& out) {
  ExperimentGrid grid;
  grid.base = ScenarioSpec::er_default();
  if (!a.config.empty()) {
    json j;
    try {
      j = json::parse(io::read_text(a.config));
    } catch (const json::parse_error& e) {
      bad(a.config, std::string("malformed JSON: ") + e.what());
    }
    grid = grid_from_json(j);
  }
  if (!a.preset.empty()) grid.base = a.preset == "er_default" ? ScenarioSpec::er_default() : ScenarioSpec::sbm_default();
  if (!a.axis.empty()) {
    grid.axis = parse_axis(a.axis);
  }
  if (!a.values.empty()) grid.axis_values = parse_values(a.values, "--values");
  if (!a.methods.empty()) grid.methods = parse_methods(a.methods);
  if (a.reps_opt->count()) grid.reps = a.reps;
  if (grid.axis_values.empty()) grid.axis_values = default_axis_values(grid.axis);
  if (grid.methods.empty()) grid.methods = all_methods();
  grid.seed = resolve_seed(a.common, grid.seed);
  apply_flags(a.est, grid.estimator);
  grid.validate();

  const fs::path dir = a.out_dir;
  ensure_dir(dir);
  const std::vector<ResultRow> rows = run_grid(grid, a.save_coefficients);
  const std::vector<SummaryRow> summary = summarize(rows);
  write_file(dir / "results.csv", results_csv(rows, a.timing), out);
  write_file(dir / "summary.csv", summary_csv(summary), out);
  write_file(dir / "config.json", grid_to_json(grid).dump(2) + "\n", out);
  if (a.plot) write_file(dir / (to_string(grid.axis) + ".svg"), svg_plot(summary, to_string(grid.axis)), out);
  if (a.save_coefficients) {
    std::ostringstream c;
    c << "axis,method,replicate,index,value\n";
    for (const auto& r : rows) {
      if (!r.gamma_hat) continue;
      for (Index i = 0; i < r.gamma_hat->size(); ++i) {
        c << io::format_double(r.axis_value) << ',' << to_string(r.method) << ',' << r.replicate << ',' << i << ','
          << io::format_double((*r.gamma_hat)(i)) << '\n';
      }
    }
    write_file(dir / "coefficients.csv", c.str(), out);
  }
  if (!a.dump.empty()) {
    for (std::size_t vi = 0; vi < grid.axis_values.size(); ++vi) {
      for (int rep = 0; rep < grid.reps; ++rep) {
        const double v = grid.axis_values[vi];
        ScenarioSpec spec = apply_axis(grid.base, grid.axis, v);
        spec.seed = cell_seed(grid.seed, v, rep);
        const json meta{{"axis", to_string(grid.axis)},
                        {"axis_value", v},
                        {"replicate", rep},
                        {"seed", spec.seed},
                        {"transferable_count", spec.transferable_count},
                        {"sources", spec.source_count()}};
        const fs::path cell = fs::path(a.dump) / ("cell_" + std::to_string(vi) + "_" + std::to_string(rep));
        dump_scenario(cell, build_scenario(spec), meta);
        out << "wrote " << cell.string() << '\n';
      }
    }
  }
  int failed = 0;
  for (const auto& r : rows) failed += !r.ok();
  if (failed) out << failed << " of " << rows.size() << " fits failed (sse = nan)\n";
  return kOk;
}

// fit, detect, aggregate

struct DataArgs {
  Common common;
  EstimatorFlags est;
  std::vector<std::string> target;
  std::vector<std::vector<std::string>> sources;
};

void add_data_flags(CLI::App* app, DataArgs& a) {
  app->add_option("--target", a.target, "Target domain: edge list, covariate CSV, response CSV")
      ->expected(3)
      ->required();
  app->add_option("--source", a.sources, "Source domain: edge list, covariate CSV, response CSV (repeatable)")
      ->expected(3);
}

struct Loaded {
  DomainData target;
  std::vector<DomainData> sources;
};

Loaded load(const DataArgs& a) {
  Loaded l;
  l.target = io::read_domain(a.target[0], a.target[1], a.target[2]);
  for (const auto& s : a.sources) {
    if (s.size() != 3) bad("--source", "expects three files");
    l.sources.push_back(io::read_domain(s[0], s[1], s[2]));
    if (l.sources.back().X.cols() != l.target.X.cols()) {
      throw DimensionMismatch(s[1] + ": expected " + std::to_string(l.target.X.cols()) + " columns (as in " +
                              a.target[1] + "), found " + std::to_string(l.sources.back().X.cols()));
    }
  }
  return l;
}

TransNcrConfig estimator(DataArgs& a) {
  TransNcrConfig cfg;
  apply_flags(a.est, cfg);
  const std::uint64_t seed = resolve_seed(a.common, 1);
  cfg.seed = seed;
  cfg.transfer.seed = seed;
  return cfg;
}

struct MethodFit {
  Vector gamma;
  double lambda_gamma = std::numeric_limits<double>::quiet_NaN();
  double lambda_delta = std::numeric_limits<double>::quiet_NaN();
  int sweeps = 0;
  double kkt_gap = 0.0;
  double objective = 0.0;
  bool converged = true;
};

MethodFit run_method(Method m, const DomainData& target, std::span<const DomainData> sources,
                     const TransNcrConfig& cfg) {
  MethodFit out;
  auto from_transfer = [&](const TransferFit& t) {
    out.gamma = t.fit.gamma_hat;
    out.lambda_gamma = t.transfer_step.lambda_used;
    out.lambda_delta = t.debias_step.lambda_used;
    out.sweeps = t.fit.sweeps;
    out.kkt_gap = std::max(t.transfer_step.kkt_gap, t.debias_step.kkt_gap);
    out.objective = t.debias_step.objective;
    out.converged = t.fit.converged;
  };
  auto from_single = [&](const FitResult& f) {
    out.gamma = f.gamma_hat;
    out.lambda_gamma = f.lambda_used;
    out.sweeps = f.sweeps;
    out.kkt_gap = f.kkt_gap;
    out.objective = f.objective;
    out.converged = f.converged;
  };
  switch (m) {
    case Method::Oracle: from_transfer(oracle_trans_ncr(target, sources, cfg.transfer)); break;
    case Method::TransLasso: from_transfer(trans_lasso_baseline(target, sources, cfg.transfer)); break;
    case Method::Ncr: from_single(target_only_ncr(target, cfg.transfer)); break;
    case Method::Lasso: from_single(target_only_lasso(target, cfg.transfer)); break;
    case Method::TransNcr: {
      const TransNcrResult r = trans_ncr(target, sources, cfg);
      from_single(r.fit);
      break;
    }
  }
  return out;
}

/// Five-fold out-of-sample RMSE on the target. Each fold trains on the graph
/// induced by the other nodes and predicts its own nodes from the full graph.
double cv_rmse(Method m, const DomainData& target, std::span<const DomainData> sources, const TransNcrConfig& cfg) {
  constexpr int kFolds = 5;
  const Index n = target.size();
  if (n < 2 * kFolds) throw InvalidArgument("--cv-rmse needs at least 10 target nodes");
  Rng rng = make_rng(cfg.seed, 0xC5ULL << 32);
  const std::vector<int> fold = fold_assignment(n, kFolds, rng);
  const Matrix Z = ncr_design(target).Z();
  double ss = 0.0;
  for (int f = 0; f < kFolds; ++f) {
    std::vector<Index> train, test;
    for (Index i = 0; i < n; ++i) (fold[i] == f ? test : train).push_back(i);
    DomainData t{target.adjacency.induced(train), target.X(train, Eigen::all), target.y(train), std::nullopt};
    const Vector g = run_method(m, t, sources, cfg).gamma;
    for (Index i : test) {
      const double e = target.y(i) - Z.row(i).dot(g);
      ss += e * e;
    }
  }
  return std::sqrt(ss / static_cast<double>(n));
}

std::string gamma_csv(const Vector& gamma) {
  const Index d = gamma.size() / 2;
  std::ostringstream out;
  out << "index,block,value\n";
  for (Index i = 0; i < gamma.size(); ++i) {
    out << i << ',' << (i < d ? "network" : "self") << ',' << io::format_double(gamma(i)) << '\n';
  }
  return out.str();
}

struct FitArgs {
  DataArgs data;
  std::string method = "transncr";
  std::string out_dir = ".";
  std::string truth;
  bool cv_rmse = false;
};

int cmd_fit(FitArgs& a, std::ostream& out) {
  const TransNcrConfig cfg = estimator(a.data);
  const Method m = parse_method(a.method);
  const Loaded l = load(a.data);
  const MethodFit fit = run_method(m, l.target, l.sources, cfg);
  std::ostringstream report;
  report << "metric,value\n";
  report << "method," << to_string(m) << '\n';
  report << "lambda_gamma," << io::format_double(fit.lambda_gamma) << '\n';
  report << "lambda_delta," << io::format_double(fit.lambda_delta) << '\n';
  report << "sweeps," << fit.sweeps << '\n';
  report << "kkt_gap," << io::format_double(fit.kkt_gap) << '\n';
  report << "objective," << io::format_double(fit.objective) << '\n';
  report << "converged," << (fit.converged ? 1 : 0) << '\n';
  if (!a.truth.empty()) {
    const Vector truth = io::read_vector_csv(fs::path(a.truth));
    if (truth.size() != fit.gamma.size()) {
      throw DimensionMismatch(a.truth + ": expected " + std::to_string(fit.gamma.size()) + " values, found " +
                              std::to_string(truth.size()));
    }
    report << "sse," << io::format_double(sse(fit.gamma, truth)) << '\n';
  }
  if (a.cv_rmse) report << "cv_rmse," << io::format_double(cv_rmse(m, l.target, l.sources, cfg)) << '\n';
  const fs::path dir = a.out_dir;
  ensure_dir(dir);
  write_file(dir / "gamma_hat.csv", gamma_csv(fit.gamma), out);
  write_file(dir / "fit_report.csv", report.str(), out);
  return kOk;
}

void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty()) {
    out << text;
  } else {
    write_file(path, text, out);
  }
}

struct DetectArgs {
  DataArgs data;
  std::string out_path;
};

int cmd_detect(DetectArgs& a, std::ostream& out) {
  const TransNcrConfig cfg = estimator(a.data);
  const Loaded l = load(a.data);
  if (l.sources.empty()) bad("--source", "detect needs at least one source");
  Rng rng = make_rng(cfg.seed, 0x5011ULL << 32);
  const SplitIndex split = split_target(l.target.size(), cfg.c0, rng);
  const std::vector<SourceScore> scores = source_scores(l.sources, l.target, split, cfg.t_star);
  const std::vector<Index> order = rank_sources(scores);
  std::vector<Index> rank(scores.size());
  for (std::size_t r = 0; r < order.size(); ++r) rank[static_cast<std::size_t>(order[r])] = static_cast<Index>(r + 1);
  std::ostringstream csv;
  csv << "k,r_hat,rank\n";
  for (const auto& s : scores) {
    csv << s.k + 1 << ',' << io::format_double(s.r_hat) << ',' << rank[static_cast<std::size_t>(s.k)] << '\n';
  }
  emit(a.out_path, csv.str(), out);
  return kOk;
}

struct AggregateArgs {
  DataArgs data;
  std::string out_path;
  std::string coefficients;
};

int cmd_aggregate(AggregateArgs& a, std::ostream& out) {
  const TransNcrConfig cfg = estimator(a.data);
  const Loaded l = load(a.data);
  const TransNcrResult r = trans_ncr(l.target, l.sources, cfg);
  std::ostringstream csv;
  csv << "candidate,sources,theta,validation_risk\n";
  for (std::size_t c = 0; c < r.candidates.size(); ++c) {
    csv << c << ',';
    for (std::size_t i = 0; i < r.candidates[c].size(); ++i) csv << (i ? ";" : "") << r.candidates[c][i] + 1;
    csv << ',' << io::format_double(r.weights.theta(static_cast<Index>(c))) << ','
        << io::format_double(r.validation_risk(static_cast<Index>(c))) << '\n';
  }
  emit(a.out_path, csv.str(), out);
  if (!a.coefficients.empty()) write_file(a.coefficients, gamma_csv(r.fit.gamma_hat), out);
  return kOk;
}

// verify

struct VerifyArgs {
  Common common;
  std::string target;
  std::string out_path;
  Index n = 0, d = 0, s = 0, n0 = 0;
  double p = 0.0, rho = 0.0, sigma = 0.0;
  int reps = 0;
  std::string source_sizes = "4000";
  std::string deltas = "1";
  Index delta_index = 0;
  CLI::Option *n_opt = nullptr, *d_opt = nullptr, *s_opt = nullptr, *n0_opt = nullptr, *p_opt = nullptr,
              *rho_opt = nullptr, *sigma_opt = nullptr, *reps_opt = nullptr;
};

template <class T>
T pick(CLI::Option* opt, const T& value, const T& fallback) {
  return opt->count() ? value : fallback;
}

int cmd_verify(VerifyArgs& a, std::ostream& out) {
  const std::uint64_t seed = resolve_seed(a.common, 1);
  std::ostringstream csv;
  const auto f = [](double x) { return io::format_double(x); };
  if (a.target == "norms") {
    const NormBoundsReport r = verify_norm_bounds(pick(a.n_opt, a.n, Index{500}), pick(a.p_opt, a.p, 0.05),
                                                  pick(a.reps_opt, a.reps, 100), seed);
    double mean[4] = {0, 0, 0, 0};
    for (const auto& d : r.draws) {
      mean[0] += d.op / r.reps;
      mean[1] += d.fro_sq / r.reps;
      mean[2] += d.gram_op / r.reps;
      mean[3] += d.gram_fro_sq / r.reps;
    }
    csv << "quantity,bound,frequency,mean\n";
    csv << "op," << f(r.bound_op) << ',' << f(r.freq_op) << ',' << f(mean[0]) << '\n';
    csv << "fro_sq," << f(r.bound_fro_sq) << ',' << f(r.freq_fro_sq) << ',' << f(mean[1]) << '\n';
    csv << "gram_op," << f(r.bound_gram_op) << ',' << f(r.freq_gram_op) << ',' << f(mean[2]) << '\n';
    csv << "gram_fro_sq," << f(r.bound_gram_fro_sq) << ',' << f(r.freq_gram_fro_sq) << ',' << f(mean[3]) << '\n';
  } else if (a.target == "ztz") {
    const ZtzReport r = verify_ztz_expectation(pick(a.n_opt, a.n, Index{200}), pick(a.d_opt, a.d, Index{4}),
                                               pick(a.rho_opt, a.rho, 0.8), pick(a.reps_opt, a.reps, 300), seed,
                                               pick(a.p_opt, a.p, 0.05));
    csv << "metric,value\n";
    csv << "max_deviation," << f(r.max_deviation) << '\n';
    csv << "max_offdiag_block," << f(r.max_offdiag_block) << '\n';
  } else if (a.target == "ols") {
    const OlsNormalityReport r =
        verify_ols_normality(pick(a.n_opt, a.n, Index{2000}), pick(a.d_opt, a.d, Index{3}),
                             pick(a.sigma_opt, a.sigma, 1.0), pick(a.reps_opt, a.reps, 300), seed,
                             pick(a.p_opt, a.p, 0.05), pick(a.rho_opt, a.rho, 0.8));
    csv << "metric,value\n";
    csv << "relative_frobenius," << f(r.relative_frobenius) << '\n';
    csv << "trace_empirical," << f(r.covariance.trace()) << '\n';
    csv << "trace_expected," << f(r.expected.trace()) << '\n';
  } else if (a.target == "rsc") {
    const Index n = pick(a.n_opt, a.n, Index{1000});
    const Index d = pick(a.d_opt, a.d, Index{20});
    const double p = pick(a.p_opt, a.p, 0.05);
    const double rho = pick(a.rho_opt, a.rho, 0.8);
    require(n >= 2 && d >= 1, "rsc: n >= 2 and d >= 1 required");
    require(p > 0.0 && p < 0.5, "rsc: p must lie in (0, 0.5)");
    Rng rng = make_rng(seed, 0x25CULL << 32);
    const AdjacencyMatrix A = gen_er(n, p, true, rng);
    const Matrix X = gen_covariates(n, CovSpec{d, rho}, rng);
    const DesignMatrix Zd = build_design(normalize(A), X);
    const RscReport r = rsc_probe(Zd, pick(a.s_opt, a.s, Index{5}), pick(a.reps_opt, a.reps, 1000), seed, rho, p);
    csv << "metric,value\n";
    csv << "min_quadratic," << f(r.min_quadratic) << '\n';
    csv << "mean_quadratic," << f(r.mean_quadratic) << '\n';
    csv << "kappa," << f(r.kappa) << '\n';
    csv << "psi," << f(r.psi) << '\n';
    csv << "calibrated_c5," << f(r.calibrated_c5) << '\n';
    csv << "trials," << r.trials << '\n';
  } else {
    PooledBiasSpec spec;
    spec.n0 = pick(a.n0_opt, a.n0, Index{4000});
    spec.d = pick(a.d_opt, a.d, Index{5});
    spec.sigma = pick(a.sigma_opt, a.sigma, 0.5);
    spec.rho = pick(a.rho_opt, a.rho, 0.8);
    spec.p = pick(a.p_opt, a.p, 0.05);
    const std::vector<double> sizes = parse_values(a.source_sizes, "--source-sizes");
    const std::vector<double> shifts = parse_values(a.deltas, "--deltas");
    if (sizes.size() != shifts.size()) bad("--deltas", "needs one value per entry of --source-sizes");
    if (a.delta_index < 0 || a.delta_index >= 2 * spec.d) bad("--delta-index", "must lie in [0, 2d)");
    for (std::size_t k = 0; k < sizes.size(); ++k) {
      if (sizes[k] < 1 || std::floor(sizes[k]) != sizes[k]) bad("--source-sizes", "expected positive integers");
      spec.source_sizes.push_back(static_cast<Index>(sizes[k]));
      Vector delta = Vector::Zero(2 * spec.d);
      delta(a.delta_index) = shifts[k];
      spec.deltas.push_back(delta);
    }
    const PooledBiasReport r = verify_pooled_bias(spec, seed);
    csv << "coordinate,pooled_bias,predicted,deviation\n";
    for (Index j = 0; j < r.predicted.size(); ++j) {
      csv << j << ',' << f(r.pooled_bias(j)) << ',' << f(r.predicted(j)) << ','
          << f(std::abs(r.pooled_bias(j) - r.predicted(j))) << '\n';
    }
  }
  emit(a.out_path, csv.str(), out);
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Network convolutional regression with transfer learning", "ncr"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "ncr 0.1.0");

  SimulateArgs sim;
  CLI::App* s = app.add_subcommand("simulate", "Run a simulation grid and write results.csv and summary.csv");
  s->add_option("--config", sim.config, "JSON config (see docs/config.md)");
  s->add_option("--preset", sim.preset, "Base scenario, replacing the config's")
      ->check(CLI::IsMember({"er_default", "sbm_default"}));
  s->add_option("--axis", sim.axis, "Varied quantity: source_size, shift or density");
  s->add_option("--values", sim.values, "Comma separated axis values");
  s->add_option("--methods", sim.methods, "Comma separated subset of oracle,transncr,ncr,translasso,lasso");
  sim.reps_opt = s->add_option("--reps", sim.reps, "Replicates per axis value");
  s->add_option("--out", sim.out_dir, "Output directory")->capture_default_str();
  s->add_flag("--plot", sim.plot, "Also write an SVG chart of median SSE against the axis");
  s->add_flag("--timing", sim.timing, "Record wall times (output then differs between runs)");
  s->add_flag("--save-coefficients", sim.save_coefficients, "Also write every estimate to coefficients.csv");
  s->add_option("--dump", sim.dump, "Write every simulated cell's data files under this directory");
  add_penalty_flags(s, sim.est);
  add_pipeline_flags(s, sim.est);
  add_common(s, sim.common);

  FitArgs fit;
  CLI::App* f = app.add_subcommand("fit", "Fit one estimator on data files; writes gamma_hat.csv and fit_report.csv");
  add_data_flags(f, fit.data);
  f->add_option("--method", fit.method, "oracle, transncr, ncr, translasso or lasso")->capture_default_str();
  f->add_option("--out", fit.out_dir, "Output directory")->capture_default_str();
  f->add_option("--truth", fit.truth, "True coefficient vector (one value per line); adds sse to the report");
  f->add_flag("--cv-rmse", fit.cv_rmse, "Add five-fold out-of-sample RMSE on the target to the report");
  add_penalty_flags(f, fit.data.est);
  add_pipeline_flags(f, fit.data.est);
  add_common(f, fit.data.common);

  DetectArgs det;
  CLI::App* d = app.add_subcommand("detect", "Score and rank sources by transferability (k,r_hat,rank)");
  add_data_flags(d, det.data);
  d->add_option("--out", det.out_path, "Output CSV (default: standard output)");
  d->add_option("--c0", det.data.est.c0, "Fraction of target rows used for the contrasts");
  det.data.est.c0_opt = d->get_option("--c0");
  det.data.est.t_star_opt = d->add_option("--t-star", det.data.est.t_star, "Screened coordinates per contrast");
  add_common(d, det.data.common);

  AggregateArgs agg;
  CLI::App* g = app.add_subcommand("aggregate", "Run the data-driven pipeline; prints weights and validation risks");
  add_data_flags(g, agg.data);
  g->add_option("--out", agg.out_path, "Output CSV (default: standard output)");
  g->add_option("--coefficients", agg.coefficients, "Also write the aggregated estimate here");
  add_penalty_flags(g, agg.data.est);
  add_pipeline_flags(g, agg.data.est);
  add_common(g, agg.data.common);

  VerifyArgs ver;
  CLI::App* v = app.add_subcommand("verify", "Monte-Carlo checks of the model's matrix identities and bounds");
  v->add_option("target", ver.target, "norms, ztz, ols, rsc or pooled-bias")
      ->required()
      ->check(CLI::IsMember({"norms", "ztz", "ols", "rsc", "pooled-bias"}));
  v->add_option("--out", ver.out_path, "Output CSV (default: standard output)");
  ver.n_opt = v->add_option("--n", ver.n, "Nodes per graph");
  ver.d_opt = v->add_option("--d", ver.d, "Feature dimension");
  ver.p_opt = v->add_option("--p", ver.p, "Edge probability");
  ver.rho_opt = v->add_option("--rho", ver.rho, "AR(1) covariate correlation");
  ver.sigma_opt = v->add_option("--sigma", ver.sigma, "Noise standard deviation");
  ver.reps_opt = v->add_option("--reps", ver.reps, "Replicates (rsc: trials)");
  ver.s_opt = v->add_option("--s", ver.s, "rsc: nonzeros per probe vector");
  ver.n0_opt = v->add_option("--n0", ver.n0, "pooled-bias: target size");
  v->add_option("--source-sizes", ver.source_sizes, "pooled-bias: comma separated source sizes")
      ->capture_default_str();
  v->add_option("--deltas", ver.deltas, "pooled-bias: shift of each source along --delta-index")
      ->capture_default_str();
  v->add_option("--delta-index", ver.delta_index, "pooled-bias: shifted coordinate")->capture_default_str();
  add_common(v, ver.common);

  std::vector<std::string> argv;
  argv.reserve(args.size());
  for (auto it = args.rbegin(); it != args.rend(); ++it) argv.push_back(*it);
  try {
    app.parse(argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    Common* common = s->parsed()   ? &sim.common
                     : f->parsed() ? &fit.data.common
                     : d->parsed() ? &det.data.common
                     : g->parsed() ? &agg.data.common
                                   : &ver.common;
    kernels::set_max_threads(common->threads);
    if (s->parsed()) return cmd_simulate(sim, out);
    if (f->parsed()) return cmd_fit(fit, out);
    if (d->parsed()) return cmd_detect(det, out);
    if (g->parsed()) return cmd_aggregate(agg, out);
    return cmd_verify(ver, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, out, err);
}

}  // namespace ncr::cli
