#include "ncr/cli.hpp"
#include "ncr/io.hpp"
#include "ncr/transfer.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace ncr;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run ncr_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("ncr_test_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const char* kTinyConfig = R"({
  "scenario": {
    "n0": 60, "d": 20, "rho": 0.5, "seed": 7,
    "target_graph": {"model": "er", "p": 0.1},
    "sources": [
      {"n": 80, "shift": 0.1, "graph": {"model": "er", "p": 0.1}},
      {"n": 80, "shift": 0.1, "graph": {"model": "er", "p": 0.1}},
      {"n": 80, "shift": 10, "graph": {"model": "er", "p": 0.1}}
    ],
    "transferable_count": 2
  },
  "experiment": {"axis": "shift", "values": [0.1, 0.5], "methods": ["ncr", "oracle", "transncr"], "reps": 2, "seed": 3}
})";

fs::path tiny_config(const fs::path& dir) {
  io::write_text(dir / "config.json", kTinyConfig);
  return dir / "config.json";
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

void write_domain(const fs::path& dir, const std::string& stem, const DomainData& d) {
  std::ofstream g(dir / (stem + ".edges")), x(dir / (stem + "_X.csv")), y(dir / (stem + "_y.csv"));
  io::write_edge_list(g, d.adjacency);
  io::write_matrix_csv(x, d.X);
  io::write_vector_csv(y, d.y);
}

Vector read_gamma_csv(const fs::path& path) {
  std::istringstream in(io::read_text(path));
  std::string line;
  std::getline(in, line);
  std::vector<double> v;
  while (std::getline(in, line)) v.push_back(std::stod(line.substr(line.rfind(',') + 1)));
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

}  // namespace

TEST_CASE("help text matches the golden files") {
  const fs::path golden = NCR_GOLDEN_DIR;
  const std::vector<std::pair<std::string, std::vector<std::string>>> cases = {
      {"help_top.txt", {"--help"}},
      {"help_simulate.txt", {"simulate", "--help"}},
      {"help_fit.txt", {"fit", "--help"}},
      {"help_detect.txt", {"detect", "--help"}},
      {"help_aggregate.txt", {"aggregate", "--help"}},
      {"help_verify.txt", {"verify", "--help"}},
  };
  for (const auto& [file, args] : cases) {
    CAPTURE(file);
    const Run r = ncr_cli(args);
    CHECK(r.code == 0);
    CHECK(r.out == io::read_text(golden / file));
  }
}

TEST_CASE("simulate writes one row per cell and method, reproducibly") {
  const fs::path dir = scratch("simulate");
  const fs::path cfg = tiny_config(dir);
  const Run a = ncr_cli({"simulate", "--config", cfg.string(), "--out", (dir / "a").string(), "--plot"});
  REQUIRE(a.code == 0);
  const std::string results = io::read_text(dir / "a" / "results.csv");
  CHECK(count_lines(results) == 1 + 2 * 2 * 3);
  CHECK(count_lines(io::read_text(dir / "a" / "summary.csv")) == 1 + 2 * 3);
  CHECK(fs::exists(dir / "a" / "shift.svg"));
  CHECK(fs::exists(dir / "a" / "config.json"));

  const Run b = ncr_cli({"simulate", "--config", cfg.string(), "--out", (dir / "b").string(), "--threads", "1"});
  REQUIRE(b.code == 0);
  CHECK(io::read_text(dir / "b" / "results.csv") == results);
  CHECK(io::read_text(dir / "b" / "summary.csv") == io::read_text(dir / "a" / "summary.csv"));

  // the written config reproduces the run on its own
  const Run c = ncr_cli({"simulate", "--config", (dir / "a" / "config.json").string(), "--out", (dir / "c").string()});
  REQUIRE(c.code == 0);
  CHECK(io::read_text(dir / "c" / "results.csv") == results);

  // flags override the config
  const Run d = ncr_cli({"simulate", "--config", cfg.string(), "--out", (dir / "d").string(), "--values", "0.2",
                         "--methods", "lasso", "--reps", "3"});
  REQUIRE(d.code == 0);
  CHECK(count_lines(io::read_text(dir / "d" / "results.csv")) == 1 + 3);
  fs::remove_all(dir);
}

TEST_CASE("NCR_SEED overrides --seed") {
  const fs::path dir = scratch("seed");
  const fs::path cfg = tiny_config(dir);
  const std::vector<std::string> base = {"simulate", "--config", cfg.string(), "--methods", "ncr", "--values", "0.1"};
  auto with = [&](const std::string& out, std::vector<std::string> extra) {
    std::vector<std::string> args = base;
    args.push_back("--out");
    args.push_back((dir / out).string());
    args.insert(args.end(), extra.begin(), extra.end());
    REQUIRE(ncr_cli(args).code == 0);
    return io::read_text(dir / out / "results.csv");
  };
  const std::string five = with("five", {"--seed", "5"});
  CHECK(with("nine", {"--seed", "9"}) != five);
  ::setenv("NCR_SEED", "5", 1);
  const std::string env = with("env", {"--seed", "9"});
  ::unsetenv("NCR_SEED");
  CHECK(env == five);
  fs::remove_all(dir);
}

TEST_CASE("config errors exit with 2") {
  const fs::path dir = scratch("config");
  io::write_text(dir / "broken.json", "{\"scenario\": ");
  Run r = ncr_cli({"simulate", "--config", (dir / "broken.json").string(), "--out", dir.string()});
  CHECK(r.code == 2);
  CHECK_FALSE(r.err.empty());

  io::write_text(dir / "typo.json", R"({"experiment": {"rep": 3}})");
  r = ncr_cli({"simulate", "--config", (dir / "typo.json").string(), "--out", dir.string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("experiment.rep: unknown field") != std::string::npos);

  CHECK(ncr_cli({"simulate", "--axis", "noise", "--out", dir.string()}).code == 2);
  CHECK(ncr_cli({"simulate", "--bogus"}).code == 2);
  CHECK(ncr_cli({}).code == 2);
  CHECK(ncr_cli({"fit", "--method", "ncr", "--c1", "2", "--target", "a", "b", "c"}).code == 2);
  CHECK(ncr_cli({"verify", "spectra"}).code == 2);
  fs::remove_all(dir);
}

TEST_CASE("fit on data files equals the library fit") {
  const fs::path dir = scratch("fit");
  const Scenario sc = build_scenario(test::tiny_spec());
  write_domain(dir, "target", sc.target);
  for (std::size_t k = 0; k < sc.sources.size(); ++k) write_domain(dir, "source" + std::to_string(k), sc.sources[k]);
  const auto target = std::vector<std::string>{"--target", (dir / "target.edges").string(),
                                               (dir / "target_X.csv").string(), (dir / "target_y.csv").string()};

  std::vector<std::string> args = {"fit", "--method", "ncr", "--seed", "17", "--out", (dir / "ncr").string()};
  args.insert(args.end(), target.begin(), target.end());
  REQUIRE(ncr_cli(args).code == 0);
  TransferConfig cfg;
  cfg.seed = 17;
  CHECK(read_gamma_csv(dir / "ncr" / "gamma_hat.csv") == target_only_ncr(sc.target, cfg).gamma_hat);
  CHECK(io::read_text(dir / "ncr" / "fit_report.csv").rfind("metric,value\nmethod,ncr\n", 0) == 0);

  args = {"fit", "--method", "oracle", "--seed", "17", "--lambda-rule", "theoretical", "--c1", "0.7",
          "--out", (dir / "oracle").string()};
  args.insert(args.end(), target.begin(), target.end());
  for (int k = 0; k < 2; ++k) {
    const std::string s = (dir / ("source" + std::to_string(k))).string();
    args.insert(args.end(), {"--source", s + ".edges", s + "_X.csv", s + "_y.csv"});
  }
  REQUIRE(ncr_cli(args).code == 0);
  cfg.lambda_gamma = TheoreticalGamma{0.7, 1.0, 0.0};
  cfg.lambda_delta = TheoreticalDelta{1.0};
  const std::span<const DomainData> a = std::span(sc.sources).first(2);
  CHECK(read_gamma_csv(dir / "oracle" / "gamma_hat.csv") == oracle_trans_ncr(sc.target, a, cfg).fit.gamma_hat);
  fs::remove_all(dir);
}

TEST_CASE("dumped cells reproduce the simulated sse") {
  const fs::path dir = scratch("dump");
  const fs::path cfg = tiny_config(dir);
  REQUIRE(ncr_cli({"simulate", "--config", cfg.string(), "--methods", "ncr", "--values", "0.5", "--reps", "1", "--out",
                   (dir / "run").string(), "--dump", (dir / "cells").string()})
              .code == 0);
  const fs::path cell = dir / "cells" / "cell_0_0";
  const nlohmann::json info = nlohmann::json::parse(io::read_text(cell / "cell.json"));
  const std::string seed = std::to_string(info["seed"].get<std::uint64_t>());
  REQUIRE(ncr_cli({"fit", "--method", "ncr", "--seed", seed, "--target", (cell / "target.edges").string(),
                   (cell / "target_X.csv").string(), (cell / "target_y.csv").string(), "--truth",
                   (cell / "gamma_true.csv").string(), "--out", (dir / "fit").string()})
              .code == 0);
  const std::string report = io::read_text(dir / "fit" / "fit_report.csv");
  const std::string results = io::read_text(dir / "run" / "results.csv");
  const auto sse_at = [](const std::string& text, const std::string& key) {
    const auto p = text.find(key);
    REQUIRE(p != std::string::npos);
    const auto start = p + key.size();
    return std::stod(text.substr(start, text.find_first_of(",\n", start) - start));
  };
  CHECK(sse_at(report, "\nsse,") == sse_at(results, "0.5,ncr,0,"));
  fs::remove_all(dir);
}

TEST_CASE("data errors exit with 3") {
  const fs::path dir = scratch("data");
  io::write_text(dir / "g.edges", "#nodes 3\n");
  io::write_text(dir / "X.csv", "1\n2\n3\n");
  io::write_text(dir / "y.csv", "1\n2\n3\n");
  io::write_text(dir / "y_short.csv", "1\n2\n");
  io::write_text(dir / "h.edges", "#nodes 3\n0 1\n1 0\n");
  Run r = ncr_cli({"fit", "--method", "ncr", "--target", (dir / "g.edges").string(), (dir / "X.csv").string(),
                   (dir / "y.csv").string()});
  CHECK(r.code == 3);
  r = ncr_cli({"fit", "--method", "ncr", "--target", (dir / "h.edges").string(), (dir / "X.csv").string(),
               (dir / "y_short.csv").string()});
  CHECK(r.code == 3);
  CHECK(r.err.find("y_short.csv") != std::string::npos);
  r = ncr_cli({"fit", "--method", "ncr", "--target", (dir / "nope.edges").string(), (dir / "X.csv").string(),
               (dir / "y.csv").string()});
  CHECK(r.code == 3);
  fs::remove_all(dir);
}

TEST_CASE("detect and aggregate print tables") {
  const fs::path dir = scratch("detect");
  const Scenario sc = build_scenario(test::tiny_spec());
  write_domain(dir, "target", sc.target);
  std::vector<std::string> data = {"--target", (dir / "target.edges").string(), (dir / "target_X.csv").string(),
                                   (dir / "target_y.csv").string()};
  for (std::size_t k = 0; k < sc.sources.size(); ++k) {
    const std::string s = "source" + std::to_string(k);
    write_domain(dir, s, sc.sources[k]);
    data.insert(data.end(), {"--source", (dir / (s + ".edges")).string(), (dir / (s + "_X.csv")).string(),
                             (dir / (s + "_y.csv")).string()});
  }
  std::vector<std::string> args = {"detect", "--seed", "4"};
  args.insert(args.end(), data.begin(), data.end());
  Run r = ncr_cli(args);
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("k,r_hat,rank\n", 0) == 0);
  CHECK(count_lines(r.out) == 4);

  args = {"aggregate", "--seed", "4", "--L", "2"};
  args.insert(args.end(), data.begin(), data.end());
  r = ncr_cli(args);
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("candidate,sources,theta,validation_risk\n", 0) == 0);
  CHECK(count_lines(r.out) == 4);
  fs::remove_all(dir);
}

TEST_CASE("verify targets write their tables") {
  Run r = ncr_cli({"verify", "ztz", "--n", "200", "--d", "3", "--reps", "3"});
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("metric,value\n", 0) == 0);
  r = ncr_cli({"verify", "norms", "--n", "100", "--reps", "2"});
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("quantity,bound,frequency,mean\n", 0) == 0);
  CHECK(count_lines(r.out) == 5);
  r = ncr_cli({"verify", "pooled-bias", "--n0", "300", "--d", "2", "--source-sizes", "300", "--deltas", "1"});
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("coordinate,pooled_bias,predicted,deviation\n", 0) == 0);
  CHECK(count_lines(r.out) == 5);
}
