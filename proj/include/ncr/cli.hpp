#pragma once

#include "ncr/aggregate.hpp"
#include "ncr/experiments.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace ncr::cli {

enum ExitCode { kOk = 0, kConfigError = 2, kDataError = 3, kNumericalError = 4 };

/// Runs one command line (without the program name). Results go to files or
/// `out`; diagnostics go to `err`. Never throws.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// The "estimator" object of a config document.
TransNcrConfig estimator_from_json(const nlohmann::json& j, const std::string& where = "estimator");
nlohmann::json estimator_to_json(const TransNcrConfig& cfg);

/// Whole simulate config: {"scenario", "experiment", "estimator"}.
ExperimentGrid grid_from_json(const nlohmann::json& j);
nlohmann::json grid_to_json(const ExperimentGrid& grid);

/// Default axis values when neither the config nor the flags give any.
std::vector<double> default_axis_values(Axis axis);

/// Maps an exception to an exit code.
int exit_code_for(const std::exception& e);

}  // namespace ncr::cli
