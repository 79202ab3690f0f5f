#pragma once

#include "ncr/core.hpp"
#include "ncr/graph.hpp"
#include "ncr/synth.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>

namespace ncr::io {

/// Shortest decimal that reads back to the same double; "nan", "inf", "-inf".
std::string format_double(double x);

/// "#nodes N" header, then one "i j" entry per line (0-indexed). Blank lines
/// and further '#' lines are ignored. `name` labels error messages.
AdjacencyMatrix read_edge_list(std::istream& in, const std::string& name = "edge list");
AdjacencyMatrix read_edge_list(const std::filesystem::path& path);
/// Every entry on its own line, row-major.
void write_edge_list(std::ostream& out, const AdjacencyMatrix& A);

/// Comma separated, no header, one row per line.
Matrix read_matrix_csv(std::istream& in, const std::string& name = "matrix");
Matrix read_matrix_csv(const std::filesystem::path& path);
void write_matrix_csv(std::ostream& out, const Matrix& M);

/// One value per line.
Vector read_vector_csv(std::istream& in, const std::string& name = "vector");
Vector read_vector_csv(const std::filesystem::path& path);
void write_vector_csv(std::ostream& out, const Vector& v);

/// Graph, covariates and response of one domain; shapes checked against each
/// other with the offending file named.
DomainData read_domain(const std::filesystem::path& graph, const std::filesystem::path& X,
                       const std::filesystem::path& y);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// Throws ConfigError naming the field (e.g. "scenario.sources[2].n").
ScenarioSpec scenario_from_json(const nlohmann::json& j, const std::string& where = "scenario");
nlohmann::json scenario_to_json(const ScenarioSpec& spec);

GraphModel graph_from_json(const nlohmann::json& j, const std::string& where);
nlohmann::json graph_to_json(const GraphModel& g);

}  // namespace ncr::io
