#include "ncr/experiments.hpp"

#include "ncr/io.hpp"
#include "ncr/kernels.hpp"
#include "ncr/transfer.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

namespace ncr {

std::string to_string(Axis a) {
  switch (a) {
    case Axis::SourceSize: return "source_size";
    case Axis::Shift: return "shift";
    case Axis::Density: return "density";
  }
  return "?";
}

std::string to_string(Method m) {
  switch (m) {
    case Method::Oracle: return "oracle";
    case Method::TransNcr: return "transncr";
    case Method::Ncr: return "ncr";
    case Method::TransLasso: return "translasso";
    case Method::Lasso: return "lasso";
  }
  return "?";
}

Axis parse_axis(const std::string& s) {
  for (Axis a : {Axis::SourceSize, Axis::Shift, Axis::Density}) {
    if (to_string(a) == s) return a;
  }
  throw ConfigError("axis: expected source_size, shift or density, got \"" + s + "\"");
}

Method parse_method(const std::string& s) {
  for (Method m : all_methods()) {
    if (to_string(m) == s) return m;
  }
  throw ConfigError("method: expected oracle, transncr, ncr, translasso or lasso, got \"" + s + "\"");
}

std::vector<Method> all_methods() {
  return {Method::Oracle, Method::TransNcr, Method::Ncr, Method::TransLasso, Method::Lasso};
}

double sse(const Vector& gamma_hat, const Vector& gamma_true) {
  if (gamma_hat.size() != gamma_true.size()) throw DimensionMismatch("sse: vectors differ in length");
  return (gamma_hat - gamma_true).squaredNorm();
}

ScenarioSpec apply_axis(const ScenarioSpec& base, Axis axis, double value) {
  ScenarioSpec s = base;
  switch (axis) {
    case Axis::SourceSize: {
      require(value >= 2.0 && std::floor(value) == value, "source_size values must be integers >= 2");
      std::fill(s.source_sizes.begin(), s.source_sizes.end(), static_cast<Index>(value));
      break;
    }
    case Axis::Shift: {
      require(value >= 0.0, "shift values must be >= 0");
      for (Index k = 0; k < s.transferable_count; ++k) s.shifts[k] = value;
      break;
    }
    case Axis::Density: {
      require(value > 0.0 && value <= 1.0, "density values must lie in (0, 1]");
      for (auto& g : s.source_graphs) {
        if (std::holds_alternative<ErModel>(g)) {
          g = ErModel{value};
        } else {
          require(2.0 * value <= 1.0, "SBM density values must be <= 0.5 (p_in = 2v)");
          g = SbmModel{2.0 * value, value};
        }
      }
      break;
    }
  }
  return s;
}

void ExperimentGrid::validate() const {
  if (axis_values.empty()) throw ConfigError("experiment.values: must be nonempty");
  if (methods.empty()) throw ConfigError("experiment.methods: must be nonempty");
  if (reps < 1) throw ConfigError("experiment.reps: must be >= 1");
  try {
    base.validate();
    estimator.validate();
    for (double v : axis_values) apply_axis(base, axis, v).validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
}

std::uint64_t cell_seed(std::uint64_t seed, double axis_value, int replicate) {
  return mix_seed(seed, mix_seed(std::bit_cast<std::uint64_t>(axis_value), static_cast<std::uint64_t>(replicate)));
}

Vector fit_method(Method m, const Scenario& sc, Index transferable_count, const TransNcrConfig& cfg,
                  std::uint64_t seed) {
  TransNcrConfig c = cfg;
  c.seed = seed;
  c.transfer.seed = seed;
  const std::span<const DomainData> transferable = std::span(sc.sources).first(static_cast<std::size_t>(transferable_count));
  switch (m) {
    case Method::Oracle: return oracle_trans_ncr(sc.target, transferable, c.transfer).fit.gamma_hat;
    case Method::TransNcr: return trans_ncr(sc.target, sc.sources, c).fit.gamma_hat;
    case Method::Ncr: return target_only_ncr(sc.target, c.transfer).gamma_hat;
    case Method::TransLasso: return trans_lasso_baseline(sc.target, transferable, c.transfer).fit.gamma_hat;
    case Method::Lasso: return target_only_lasso(sc.target, c.transfer).gamma_hat;
  }
  throw InvalidArgument("unknown method");
}

std::vector<ResultRow> run_grid(const ExperimentGrid& grid, bool keep_coefficients) {
  grid.validate();
  const int values = static_cast<int>(grid.axis_values.size());
  const int methods = static_cast<int>(grid.methods.size());
  const int cells = values * grid.reps;
  std::vector<ResultRow> rows(static_cast<std::size_t>(cells * methods));
#pragma omp parallel for schedule(dynamic) num_threads(kernels::max_threads())
  for (int cell = 0; cell < cells; ++cell) {
    const int vi = cell / grid.reps;
    const int rep = cell % grid.reps;
    const double value = grid.axis_values[vi];
    const std::uint64_t seed = cell_seed(grid.seed, value, rep);
    ScenarioSpec spec = apply_axis(grid.base, grid.axis, value);
    spec.seed = seed;
    std::optional<Scenario> sc;
    std::string build_error;
    try {
      sc = build_scenario(spec);
    } catch (const std::exception& e) {
      build_error = e.what();
    }
    for (int mi = 0; mi < methods; ++mi) {
      ResultRow& row = rows[static_cast<std::size_t>((vi * methods + mi) * grid.reps + rep)];
      row.axis_value = value;
      row.method = grid.methods[mi];
      row.replicate = rep;
      row.sse = std::numeric_limits<double>::quiet_NaN();
      if (!sc) {
        row.error = build_error.empty() ? "scenario failed" : build_error;
        continue;
      }
      const auto t0 = std::chrono::steady_clock::now();
      try {
        Vector g = fit_method(row.method, *sc, spec.transferable_count, grid.estimator, seed);
        row.sse = sse(g, sc->target.truth.value().gamma());
        if (keep_coefficients) row.gamma_hat = std::move(g);
      } catch (const std::exception& e) {
        row.error = e.what();
        if (row.error.empty()) row.error = "fit failed";
      }
      row.wall_time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    }
  }
  return rows;
}

std::string results_csv(std::span<const ResultRow> rows, bool timing) {
  std::ostringstream out;
  out << "axis,method,replicate,sse,wall_time_ms\n";
  for (const auto& r : rows) {
    out << io::format_double(r.axis_value) << ',' << to_string(r.method) << ',' << r.replicate << ','
        << io::format_double(r.sse) << ',' << (timing ? io::format_double(r.wall_time_ms) : "0") << '\n';
  }
  return out.str();
}

double quantile_sorted(std::span<const double> sorted, double q) {
  require(!sorted.empty(), "quantile: no values");
  require(q >= 0.0 && q <= 1.0, "quantile: q must lie in [0, 1]");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double median(std::vector<double> values) {
  require(!values.empty(), "median: no values");
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size();
  return m % 2 == 1 ? values[m / 2] : 0.5 * (values[m / 2 - 1] + values[m / 2]);
}

std::vector<SummaryRow> summarize(std::span<const ResultRow> rows) {
  std::vector<std::pair<double, Method>> keys;
  std::map<std::pair<std::uint64_t, int>, std::size_t> index;
  std::vector<std::vector<double>> ok;
  std::vector<int> fail;
  for (const auto& r : rows) {
    const auto key = std::make_pair(std::bit_cast<std::uint64_t>(r.axis_value), static_cast<int>(r.method));
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, keys.size()).first;
      keys.emplace_back(r.axis_value, r.method);
      ok.emplace_back();
      fail.push_back(0);
    }
    if (r.ok() && std::isfinite(r.sse)) {
      ok[it->second].push_back(r.sse);
    } else {
      ++fail[it->second];
    }
  }
  std::vector<SummaryRow> out;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < keys.size(); ++i) {
    SummaryRow s;
    s.axis_value = keys[i].first;
    s.method = keys[i].second;
    s.n_ok = static_cast<int>(ok[i].size());
    s.n_fail = fail[i];
    if (ok[i].empty()) {
      s.median = s.mean = s.q25 = s.q75 = nan;
    } else {
      std::vector<double> v = ok[i];
      std::sort(v.begin(), v.end());
      s.median = median(v);
      s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
      s.q25 = quantile_sorted(v, 0.25);
      s.q75 = quantile_sorted(v, 0.75);
    }
    out.push_back(s);
  }
  return out;
}

std::string summary_csv(std::span<const SummaryRow> rows) {
  std::ostringstream out;
  out << "axis,method,median_sse,mean_sse,q25,q75,n_ok,n_fail\n";
  for (const auto& r : rows) {
    out << io::format_double(r.axis_value) << ',' << to_string(r.method) << ',' << io::format_double(r.median) << ','
        << io::format_double(r.mean) << ',' << io::format_double(r.q25) << ',' << io::format_double(r.q75) << ','
        << r.n_ok << ',' << r.n_fail << '\n';
  }
  return out.str();
}

namespace {

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

const char* color(Method m) {
  switch (m) {
    case Method::Oracle: return "#1f77b4";
    case Method::TransNcr: return "#d62728";
    case Method::Ncr: return "#2ca02c";
    case Method::TransLasso: return "#ff7f0e";
    case Method::Lasso: return "#9467bd";
  }
  return "#000000";
}

}  // namespace

std::string svg_plot(std::span<const SummaryRow> rows, const std::string& axis_label) {
  constexpr double W = 800, H = 500, left = 70, right = 150, top = 40, bottom = 60;
  const double pw = W - left - right;
  const double ph = H - top - bottom;
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymax = 0.0;
  std::vector<Method> series;
  for (const auto& r : rows) {
    xmin = std::min(xmin, r.axis_value);
    xmax = std::max(xmax, r.axis_value);
    if (std::isfinite(r.median)) ymax = std::max(ymax, r.median);
    if (std::find(series.begin(), series.end(), r.method) == series.end()) series.push_back(r.method);
  }
  if (rows.empty()) xmin = 0.0, xmax = 1.0;
  if (xmax == xmin) xmin -= 1.0, xmax += 1.0;
  if (!(ymax > 0.0)) ymax = 1.0;
  ymax *= 1.05;
  auto sx = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  auto sy = [&](double y) { return top + ph - y / ymax * ph; };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"500\" viewBox=\"0 0 800 500\">\n";
  out << "<rect width=\"800\" height=\"500\" fill=\"white\"/>\n";
  out << "<text x=\"" << left + pw / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">Median SSE by "
      << axis_label << "</text>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\"" << top + ph
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph
      << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 5; ++t) {
    const double y = ymax * t / 5.0;
    out << "<line x1=\"" << left - 5 << "\" y1=\"" << sy(y) << "\" x2=\"" << left << "\" y2=\"" << sy(y)
        << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << left - 8 << "\" y=\"" << sy(y) + 4 << "\" text-anchor=\"end\" font-size=\"12\">"
        << label(y) << "</text>\n";
  }
  std::vector<double> xs;
  for (const auto& r : rows) {
    if (std::find(xs.begin(), xs.end(), r.axis_value) == xs.end()) xs.push_back(r.axis_value);
  }
  for (double x : xs) {
    out << "<line x1=\"" << sx(x) << "\" y1=\"" << top + ph << "\" x2=\"" << sx(x) << "\" y2=\"" << top + ph + 5
        << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << sx(x) << "\" y=\"" << top + ph + 20 << "\" text-anchor=\"middle\" font-size=\"12\">"
        << label(x) << "</text>\n";
  }
  out << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\" font-size=\"14\">"
      << axis_label << "</text>\n";
  out << "<text x=\"18\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 18 "
      << top + ph / 2 << ")\">median SSE</text>\n";
  for (std::size_t si = 0; si < series.size(); ++si) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& r : rows) {
      if (r.method == series[si] && std::isfinite(r.median)) pts.emplace_back(r.axis_value, r.median);
    }
    std::sort(pts.begin(), pts.end());
    out << "<polyline fill=\"none\" stroke=\"" << color(series[si]) << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) out << (i ? " " : "") << sx(pts[i].first) << ',' << sy(pts[i].second);
    out << "\"/>\n";
    for (const auto& [x, y] : pts) {
      out << "<circle cx=\"" << sx(x) << "\" cy=\"" << sy(y) << "\" r=\"3\" fill=\"" << color(series[si]) << "\"/>\n";
    }
    const double ly = top + 20.0 + 22.0 * static_cast<double>(si);
    out << "<line x1=\"" << W - right + 15 << "\" y1=\"" << ly << "\" x2=\"" << W - right + 40 << "\" y2=\"" << ly
        << "\" stroke=\"" << color(series[si]) << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << W - right + 46 << "\" y=\"" << ly + 4 << "\" font-size=\"12\">" << to_string(series[si])
        << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

double rank_auc(std::span<const double> positive, std::span<const double> negative) {
  require(!positive.empty() && !negative.empty(), "rank_auc: both classes must be nonempty");
  double wins = 0.0;
  for (double p : positive) {
    for (double q : negative) wins += p > q ? 1.0 : (p == q ? 0.5 : 0.0);
  }
  return wins / (static_cast<double>(positive.size()) * static_cast<double>(negative.size()));
}

DetectionReport detection_auc(const ScenarioSpec& spec, int reps, std::uint64_t seed, double c0,
                              std::optional<Index> t_star) {
  spec.validate();
  require(reps >= 1, "detection_auc: reps must be >= 1");
  const Index a = spec.transferable_count;
  if (a == 0 || a == spec.source_count()) {
    throw InvalidArgument("detection_auc: the transferable set must be a proper nonempty subset of the sources");
  }
  std::vector<std::vector<double>> pos(static_cast<std::size_t>(reps)), neg(static_cast<std::size_t>(reps));
  std::vector<int> top(static_cast<std::size_t>(reps), 0);
#pragma omp parallel for schedule(dynamic) num_threads(kernels::max_threads())
  for (int r = 0; r < reps; ++r) {
    ScenarioSpec s = spec;
    s.seed = mix_seed(seed, static_cast<std::uint64_t>(r));
    const Scenario sc = build_scenario(s);
    Rng rng = make_rng(s.seed, 0x5011ULL << 32);
    const SplitIndex split = split_target(s.n0, c0, rng);
    const std::vector<SourceScore> scores = source_scores(sc.sources, sc.target, split, t_star);
    for (const auto& sc_k : scores) (sc_k.k < a ? pos : neg)[r].push_back(-sc_k.r_hat);
    const std::vector<Index> order = rank_sources(scores);
    top[r] = std::all_of(order.begin(), order.begin() + a, [&](Index k) { return k < a; });
  }
  std::vector<double> p, n;
  for (int r = 0; r < reps; ++r) {
    p.insert(p.end(), pos[r].begin(), pos[r].end());
    n.insert(n.end(), neg[r].begin(), neg[r].end());
  }
  DetectionReport rep;
  rep.reps = reps;
  rep.auc = rank_auc(p, n);
  rep.top_fraction = static_cast<double>(std::accumulate(top.begin(), top.end(), 0)) / reps;
  return rep;
}

}  // namespace ncr
