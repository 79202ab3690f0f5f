#include "ncr/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

namespace ncr::io {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& tok, const std::string& name, std::size_t line) {
  const std::string t = trim(tok);
  double v = 0.0;
  const char* first = t.data();
  if (!t.empty() && t[0] == '+') ++first;
  const auto res = std::from_chars(first, t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    throw DataError(name + ":" + std::to_string(line) + ": not a number: '" + t + "'");
  }
  return v;
}

Index parse_index(const std::string& tok, const std::string& name, std::size_t line) {
  long long v = 0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (tok.empty() || res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
    throw DataError(name + ":" + std::to_string(line) + ": not an integer: '" + tok + "'");
  }
  return static_cast<Index>(v);
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path.string() + ": cannot open");
  return in;
}

}  // namespace

AdjacencyMatrix read_edge_list(std::istream& in, const std::string& name) {
  std::string line;
  std::size_t lineno = 0;
  Index n = -1;
  std::vector<Edge> edges;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty()) continue;
    std::istringstream ss(t);
    if (t[0] == '#') {
      std::string key;
      ss >> key;
      if (key == "#nodes") {
        if (n >= 0) throw DataError(name + ":" + std::to_string(lineno) + ": repeated #nodes header");
        if (!edges.empty()) throw DataError(name + ":" + std::to_string(lineno) + ": #nodes must precede entries");
        std::string count;
        ss >> count;
        n = parse_index(count, name, lineno);
        if (n < 1) throw DataError(name + ":" + std::to_string(lineno) + ": #nodes must be >= 1");
      }
      continue;
    }
    if (n < 0) throw DataError(name + ":" + std::to_string(lineno) + ": missing '#nodes N' header");
    std::string a, b, extra;
    ss >> a >> b;
    if (b.empty() || (ss >> extra)) throw DataError(name + ":" + std::to_string(lineno) + ": expected 'i j'");
    edges.emplace_back(parse_index(a, name, lineno), parse_index(b, name, lineno));
  }
  if (n < 0) throw DataError(name + ": missing '#nodes N' header");
  try {
    return AdjacencyMatrix::from_edges(n, edges);
  } catch (const DataError& e) {
    throw DataError(name + ": " + e.what());
  }
}

AdjacencyMatrix read_edge_list(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  return read_edge_list(in, path.string());
}

void write_edge_list(std::ostream& out, const AdjacencyMatrix& A) {
  out << "#nodes " << A.size() << '\n';
  for (const auto& [i, j] : A.edges()) out << i << ' ' << j << '\n';
}

Matrix read_matrix_csv(std::istream& in, const std::string& name) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::vector<double> row;
    std::istringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(parse_double(cell, name, lineno));
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw DataError(name + ":" + std::to_string(lineno) + ": expected " + std::to_string(rows.front().size()) +
                      " columns, found " + std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError(name + ": no rows");
  Matrix M(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < M.rows(); ++i) {
    for (Index j = 0; j < M.cols(); ++j) M(i, j) = rows[i][j];
  }
  return M;
}

Matrix read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  return read_matrix_csv(in, path.string());
}

void write_matrix_csv(std::ostream& out, const Matrix& M) {
  for (Index i = 0; i < M.rows(); ++i) {
    for (Index j = 0; j < M.cols(); ++j) {
      if (j) out << ',';
      out << format_double(M(i, j));
    }
    out << '\n';
  }
}

Vector read_vector_csv(std::istream& in, const std::string& name) {
  std::vector<double> vals;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    if (line.find(',') != std::string::npos) {
      throw DataError(name + ":" + std::to_string(lineno) + ": expected one value per line");
    }
    vals.push_back(parse_double(line, name, lineno));
  }
  if (vals.empty()) throw DataError(name + ": no values");
  return Eigen::Map<const Vector>(vals.data(), static_cast<Index>(vals.size()));
}

Vector read_vector_csv(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  return read_vector_csv(in, path.string());
}

void write_vector_csv(std::ostream& out, const Vector& v) {
  for (Index i = 0; i < v.size(); ++i) out << format_double(v(i)) << '\n';
}

DomainData read_domain(const std::filesystem::path& graph, const std::filesystem::path& X,
                       const std::filesystem::path& y) {
  AdjacencyMatrix A = read_edge_list(graph);
  Matrix Xm = read_matrix_csv(X);
  Vector yv = read_vector_csv(y);
  if (Xm.rows() != A.size()) {
    throw DimensionMismatch(X.string() + ": expected " + std::to_string(A.size()) + " rows (nodes in " +
                            graph.string() + "), found " + std::to_string(Xm.rows()));
  }
  if (yv.size() != A.size()) {
    throw DimensionMismatch(y.string() + ": expected " + std::to_string(A.size()) + " values (nodes in " +
                            graph.string() + "), found " + std::to_string(yv.size()));
  }
  return DomainData{std::move(A), std::move(Xm), std::move(yv), std::nullopt};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path.string() + ": cannot open for writing");
  out << text;
  if (!out) throw DataError(path.string() + ": write failed");
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string() + ": cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& where, const std::string& why) { throw ConfigError(where + ": " + why); }

double get_number(const json& j, const std::string& where) {
  if (!j.is_number()) bad(where, "expected a number");
  return j.get<double>();
}

Index get_count(const json& j, const std::string& where) {
  if (!j.is_number_integer() && !(j.is_number() && std::floor(j.get<double>()) == j.get<double>())) {
    bad(where, "expected an integer");
  }
  return static_cast<Index>(j.get<double>());
}

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) bad(where + "." + key, "unknown field");
  }
}

}  // namespace

GraphModel graph_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) bad(where, "expected an object");
  if (!j.contains("model") || !j["model"].is_string()) bad(where + ".model", "expected \"er\" or \"sbm\"");
  const std::string model = j["model"].get<std::string>();
  if (model == "er") {
    check_keys(j, where, {"model", "p"});
    ErModel m;
    if (j.contains("p")) m.p = get_number(j["p"], where + ".p");
    if (!(m.p > 0.0 && m.p <= 1.0)) bad(where + ".p", "must lie in (0, 1]");
    return m;
  }
  if (model == "sbm") {
    check_keys(j, where, {"model", "p_in", "p_out"});
    SbmModel m;
    if (j.contains("p_in")) m.p_in = get_number(j["p_in"], where + ".p_in");
    if (j.contains("p_out")) m.p_out = get_number(j["p_out"], where + ".p_out");
    if (!(m.p_out >= 0.0 && m.p_out <= m.p_in && m.p_in <= 1.0 && m.p_in > 0.0)) {
      bad(where, "needs 0 <= p_out <= p_in <= 1 and p_in > 0");
    }
    return m;
  }
  bad(where + ".model", "expected \"er\" or \"sbm\", got \"" + model + "\"");
}

json graph_to_json(const GraphModel& g) {
  if (const auto* er = std::get_if<ErModel>(&g)) return json{{"model", "er"}, {"p", er->p}};
  const auto& sbm = std::get<SbmModel>(g);
  return json{{"model", "sbm"}, {"p_in", sbm.p_in}, {"p_out", sbm.p_out}};
}

ScenarioSpec scenario_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) bad(where, "expected an object");
  check_keys(j, where,
             {"preset", "n0", "d", "rho", "sigma", "symmetric", "seed", "target_graph", "sources", "transferable_count",
              "self_base", "response_density"});
  ScenarioSpec s = ScenarioSpec::er_default();
  if (j.contains("preset")) {
    const json& p = j["preset"];
    if (p == "er_default") {
      s = ScenarioSpec::er_default();
    } else if (p == "sbm_default") {
      s = ScenarioSpec::sbm_default();
    } else {
      bad(where + ".preset", "expected \"er_default\" or \"sbm_default\"");
    }
  }
  if (j.contains("n0")) s.n0 = get_count(j["n0"], where + ".n0");
  if (j.contains("d")) s.d = get_count(j["d"], where + ".d");
  if (j.contains("rho")) s.rho = get_number(j["rho"], where + ".rho");
  if (j.contains("sigma")) s.sigma = get_number(j["sigma"], where + ".sigma");
  if (j.contains("symmetric")) {
    if (!j["symmetric"].is_boolean()) bad(where + ".symmetric", "expected true or false");
    s.symmetric = j["symmetric"].get<bool>();
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer()) bad(where + ".seed", "expected an integer");
    s.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("target_graph")) s.target_graph = graph_from_json(j["target_graph"], where + ".target_graph");
  if (j.contains("sources")) {
    const json& src = j["sources"];
    if (!src.is_array()) bad(where + ".sources", "expected an array");
    s.source_sizes.clear();
    s.shifts.clear();
    s.source_graphs.clear();
    for (std::size_t k = 0; k < src.size(); ++k) {
      const std::string at = where + ".sources[" + std::to_string(k) + "]";
      if (!src[k].is_object()) bad(at, "expected an object");
      check_keys(src[k], at, {"n", "shift", "graph"});
      if (!src[k].contains("n")) bad(at + ".n", "missing");
      if (!src[k].contains("shift")) bad(at + ".shift", "missing");
      s.source_sizes.push_back(get_count(src[k]["n"], at + ".n"));
      s.shifts.push_back(get_number(src[k]["shift"], at + ".shift"));
      s.source_graphs.push_back(src[k].contains("graph") ? graph_from_json(src[k]["graph"], at + ".graph")
                                                         : s.target_graph);
    }
  }
  if (j.contains("transferable_count")) {
    s.transferable_count = get_count(j["transferable_count"], where + ".transferable_count");
  }
  if (j.contains("self_base")) {
    const json& v = j["self_base"];
    if (v == "target_network") {
      s.self_base = SourceSelfBase::TargetNetwork;
    } else if (v == "target_self") {
      s.self_base = SourceSelfBase::TargetSelf;
    } else {
      bad(where + ".self_base", "expected \"target_network\" or \"target_self\"");
    }
  }
  if (j.contains("response_density")) {
    const json& v = j["response_density"];
    if (v == "estimated") {
      s.response_density = ResponseDensity::Estimated;
    } else if (v == "true") {
      s.response_density = ResponseDensity::True;
    } else {
      bad(where + ".response_density", "expected \"estimated\" or \"true\"");
    }
  }
  try {
    s.validate();
  } catch (const InvalidArgument& e) {
    // validate() reports "scenario.<field>: why"; keep the caller's prefix.
    std::string msg = e.what();
    if (msg.rfind("scenario.", 0) == 0) msg = where + msg.substr(8);
    throw ConfigError(msg);
  }
  return s;
}

json scenario_to_json(const ScenarioSpec& spec) {
  json sources = json::array();
  for (std::size_t k = 0; k < spec.source_sizes.size(); ++k) {
    sources.push_back(json{{"n", spec.source_sizes[k]}, {"shift", spec.shifts[k]},
                           {"graph", graph_to_json(spec.source_graphs[k])}});
  }
  return json{{"n0", spec.n0},
              {"d", spec.d},
              {"rho", spec.rho},
              {"sigma", spec.sigma},
              {"symmetric", spec.symmetric},
              {"seed", spec.seed},
              {"target_graph", graph_to_json(spec.target_graph)},
              {"sources", sources},
              {"transferable_count", spec.transferable_count},
              {"self_base", spec.self_base == SourceSelfBase::TargetNetwork ? "target_network" : "target_self"},
              {"response_density", spec.response_density == ResponseDensity::Estimated ? "estimated" : "true"}};
}

}  // namespace ncr::io
