#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <sstream>
#include <string>
#include <vector>

#include "ertk/bench.hpp"
#include "ertk/exact.hpp"

using namespace ertk;

namespace {

Graph k4() {
  return Graph::from_edges(4, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}});
}

BenchConfig small_config() {
  BenchConfig cfg;
  cfg.graph_id = "k4";
  cfg.pairs = {{0, 1}, {1, 3}};
  cfg.eps_list = {0.25};
  cfg.seeds = {1, 2};
  cfg.algos = {"bidirectional", "baseline", "sketch"};
  cfg.levels = 4;
  return cfg;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

TEST_CASE("bench emits one row per run") {
  Graph g = k4();
  std::vector<BenchRow> rows = run_bench(g, small_config());
  // 2 algos * 1 eps * 2 seeds * 2 pairs + 2 builds + 2 * 2 queries
  REQUIRE(rows.size() == 14);

  size_t builds = 0, queries = 0, pair_runs = 0;
  for (const BenchRow& row : rows) {
    REQUIRE(row.graph == "k4");
    REQUIRE(row.eps == 0.25);
    REQUIRE(row.levels == 4);
    if (row.algorithm == "sketch-build") {
      ++builds;
      REQUIRE(row.s == 0);
      REQUIRE(row.t == 0);
      REQUIRE(row.queries > 0);  // walks hit the adjacency oracle
    } else if (row.algorithm == "sketch-query") {
      ++queries;
      REQUIRE(row.queries == 0);  // answered from the index alone
      REQUIRE(row.exact == Catch::Approx(0.5).epsilon(1e-12));
      REQUIRE(row.rel_error == Catch::Approx(std::abs(row.estimate - 0.5) / 0.5));
    } else {
      REQUIRE((row.algorithm == "bidirectional" || row.algorithm == "baseline"));
      ++pair_runs;
      REQUIRE(row.queries > 0);
      REQUIRE(row.exact == Catch::Approx(0.5).epsilon(1e-12));
    }
  }
  REQUIRE(builds == 2);
  REQUIRE(queries == 4);
  REQUIRE(pair_runs == 8);
}

TEST_CASE("bench rows are deterministic apart from timing") {
  Graph g = k4();
  std::vector<BenchRow> a = run_bench(g, small_config());
  std::vector<BenchRow> b = run_bench(g, small_config());
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a[i].algorithm == b[i].algorithm);
    REQUIRE(a[i].s == b[i].s);
    REQUIRE(a[i].t == b[i].t);
    REQUIRE(a[i].seed == b[i].seed);
    REQUIRE(a[i].queries == b[i].queries);
    REQUIRE(a[i].estimate == b[i].estimate);
    REQUIRE(a[i].exact == b[i].exact);
    REQUIRE(a[i].rel_error == b[i].rel_error);
  }
}

TEST_CASE("skipping the exact column zeroes it") {
  Graph g = k4();
  BenchConfig cfg = small_config();
  cfg.with_exact = false;
  cfg.algos = {"bidirectional"};
  for (const BenchRow& row : run_bench(g, cfg)) {
    REQUIRE(row.exact == 0.0);
    REQUIRE(row.rel_error == 0.0);
  }
}

TEST_CASE("csv output round-trips every numeric column") {
  Graph g = k4();
  std::vector<BenchRow> rows = run_bench(g, small_config());
  std::ostringstream out;
  write_csv(rows, out);
  std::istringstream in(out.str());
  std::string line;
  REQUIRE(std::getline(in, line));
  REQUIRE(line == kBenchCsvHeader);
  size_t i = 0;
  while (std::getline(in, line)) {
    REQUIRE(i < rows.size());
    std::vector<std::string> cols = split(line, ',');
    REQUIRE(cols.size() == 12);
    REQUIRE(cols[0] == rows[i].algorithm);
    REQUIRE(cols[1] == rows[i].graph);
    REQUIRE(std::stoul(cols[2]) == rows[i].s);
    REQUIRE(std::stoul(cols[3]) == rows[i].t);
    // %.17g strings parse back to the exact double
    REQUIRE(std::strtod(cols[4].c_str(), nullptr) == rows[i].eps);
    REQUIRE(std::stoul(cols[5]) == rows[i].levels);
    REQUIRE(std::stoull(cols[6]) == rows[i].seed);
    REQUIRE(std::stoull(cols[7]) == rows[i].queries);
    REQUIRE(std::stoull(cols[8]) == rows[i].wall_ns);
    REQUIRE(std::strtod(cols[9].c_str(), nullptr) == rows[i].estimate);
    REQUIRE(std::strtod(cols[10].c_str(), nullptr) == rows[i].exact);
    REQUIRE(std::strtod(cols[11].c_str(), nullptr) == rows[i].rel_error);
    ++i;
  }
  REQUIRE(i == rows.size());
}

TEST_CASE("bench validates its configuration") {
  Graph g = k4();
  BenchConfig cfg = small_config();
  cfg.algos = {"magic"};
  REQUIRE_THROWS_AS(run_bench(g, cfg), std::invalid_argument);
  cfg = small_config();
  cfg.eps_list.clear();
  REQUIRE_THROWS_AS(run_bench(g, cfg), std::invalid_argument);
  cfg = small_config();
  cfg.seeds.clear();
  REQUIRE_THROWS_AS(run_bench(g, cfg), std::invalid_argument);
}
