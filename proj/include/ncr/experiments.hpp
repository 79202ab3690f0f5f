#pragma once

#include "ncr/aggregate.hpp"
#include "ncr/core.hpp"
#include "ncr/synth.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ncr {

enum class Axis { SourceSize, Shift, Density };
enum class Method { Oracle, TransNcr, Ncr, TransLasso, Lasso };

std::string to_string(Axis a);
std::string to_string(Method m);
/// Throw ConfigError on unknown names.
Axis parse_axis(const std::string& s);
Method parse_method(const std::string& s);
std::vector<Method> all_methods();

/// sum_j (a_j - b_j)^2
double sse(const Vector& gamma_hat, const Vector& gamma_true);

/// source_size sets every n_k; shift sets delta_k of the transferable
/// sources; density sets the source graphs' p (SBM: p_out = v, p_in = 2v).
ScenarioSpec apply_axis(const ScenarioSpec& base, Axis axis, double value);

struct ExperimentGrid {
  Axis axis = Axis::SourceSize;
  std::vector<double> axis_values;
  ScenarioSpec base;
  std::vector<Method> methods;
  int reps = 20;
  std::uint64_t seed = 1;
  TransNcrConfig estimator;

  void validate() const;
};

/// Seed of the scenario (and of every estimator) for one grid cell.
std::uint64_t cell_seed(std::uint64_t seed, double axis_value, int replicate);

struct ResultRow {
  double axis_value = 0.0;
  Method method = Method::Ncr;
  int replicate = 0;
  double sse = 0.0;        // NaN when the fit failed
  double wall_time_ms = 0.0;
  std::string error;       // empty on success
  std::optional<Vector> gamma_hat;

  bool ok() const { return error.empty(); }
};

/// Fits one method on one scenario; the estimators' seeds are `seed`.
Vector fit_method(Method m, const Scenario& sc, Index transferable_count, const TransNcrConfig& cfg,
                  std::uint64_t seed);

/// Every (axis value, replicate) cell builds one scenario shared by all
/// methods. Cells run in parallel; rows come back ordered by axis value
/// (as listed), method (as listed), replicate.
std::vector<ResultRow> run_grid(const ExperimentGrid& grid, bool keep_coefficients = false);

/// axis,method,replicate,sse,wall_time_ms. Wall times are written as 0
/// unless `timing` is set, so that output is reproducible byte for byte.
std::string results_csv(std::span<const ResultRow> rows, bool timing = false);

struct SummaryRow {
  double axis_value = 0.0;
  Method method = Method::Ncr;
  double median = 0.0;
  double mean = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  int n_ok = 0;
  int n_fail = 0;
};

/// Type-7 quantile of sorted values.
double quantile_sorted(std::span<const double> sorted, double q);
double median(std::vector<double> values);

/// One row per (axis value, method) present, in first-appearance order.
std::vector<SummaryRow> summarize(std::span<const ResultRow> rows);
std::string summary_csv(std::span<const SummaryRow> rows);

/// Line chart of median SSE against the axis value, one series per method.
std::string svg_plot(std::span<const SummaryRow> rows, const std::string& axis_label);

struct DetectionReport {
  double auc = 0.0;
  /// fraction of replicates whose |A| smallest scores are exactly the transferable sources
  double top_fraction = 0.0;
  int reps = 0;
};

/// Mann-Whitney AUC of `positive` scores against `negative` ones (ties count 1/2).
double rank_auc(std::span<const double> positive, std::span<const double> negative);

/// AUC of -R_hat for membership in the transferable set, pooled over reps.
DetectionReport detection_auc(const ScenarioSpec& spec, int reps, std::uint64_t seed, double c0 = 0.5,
                              std::optional<Index> t_star = std::nullopt);

}  // namespace ncr
