#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ertk/estimator.hpp"
#include "ertk/exact.hpp"
#include "ertk/graph.hpp"
#include "ertk/sketch.hpp"

namespace ertk {

struct BenchRow {
  std::string algorithm;
  std::string graph;
  uint32_t s = 0, t = 0;
  double eps = 0.0;
  uint32_t levels = 0;
  uint64_t seed = 0;
  uint64_t queries = 0;  // adjacency-oracle calls consumed by the run
  uint64_t wall_ns = 0;
  double estimate = 0.0;
  double exact = 0.0;
  double rel_error = 0.0;
};

inline constexpr const char* kBenchCsvHeader =
    "algorithm,graph,s,t,eps,L,seed,queries,wall_ns,estimate,exact,rel_error";

struct BenchConfig {
  std::string graph_id = "graph";
  std::vector<std::pair<uint32_t, uint32_t>> pairs;
  std::vector<double> eps_list;
  std::vector<uint64_t> seeds;
  // any of "bidirectional", "baseline", "sketch"; a sketch run emits one
  // sketch-build row per (eps, seed) and a sketch-query row per pair
  std::vector<std::string> algos;
  std::optional<uint32_t> levels;
  std::optional<double> kappa;
  bool with_exact = true;  // exact column costs one dense solve per pair
  uint32_t workers = 1;    // sketch build parallelism
};

// Runs every (algorithm, eps, seed, pair) combination in a fixed order and
// returns one row per run. Everything except wall_ns is deterministic for a
// given graph and config.
inline std::vector<BenchRow> run_bench(const Graph& g, const BenchConfig& cfg) {
  for (const auto& algo : cfg.algos)
    if (algo != "bidirectional" && algo != "baseline" && algo != "sketch")
      throw std::invalid_argument("run_bench: unknown algorithm " + algo);
  if (cfg.eps_list.empty()) throw std::invalid_argument("run_bench: no eps values");
  if (cfg.seeds.empty()) throw std::invalid_argument("run_bench: no seeds");

  std::vector<double> exact_values(cfg.pairs.size(), 0.0);
  if (cfg.with_exact)
    for (size_t i = 0; i < cfg.pairs.size(); ++i)
      exact_values[i] = exact_resistance(g, cfg.pairs[i].first, cfg.pairs[i].second);

  CountingGraph<Graph> counted(g);
  auto now = [] { return std::chrono::steady_clock::now(); };
  auto ns_between = [](auto a, auto b) {
    return static_cast<uint64_t>(
        std::chrono::duration_cast<std::chrono::nanoseconds>(b - a).count());
  };
  auto finish_row = [&](BenchRow& row, size_t pair_idx) {
    if (cfg.with_exact) {
      row.exact = exact_values[pair_idx];
      if (row.exact > 0.0) row.rel_error = std::abs(row.estimate - row.exact) / row.exact;
    }
  };

  std::vector<BenchRow> rows;
  for (const auto& algo : cfg.algos) {
    for (double eps : cfg.eps_list) {
      for (uint64_t seed : cfg.seeds) {
        if (algo == "sketch") {
          IndexOptions iopts;
          iopts.seed = seed;
          iopts.levels = cfg.levels;
          iopts.kappa = cfg.kappa;
          iopts.workers = cfg.workers;
          counted.reset_counts();
          auto t0 = now();
          ResistanceIndex idx = build_index(counted, eps, iopts);
          auto t1 = now();
          BenchRow build;
          build.algorithm = "sketch-build";
          build.graph = cfg.graph_id;
          build.eps = eps;
          build.levels = idx.levels;
          build.seed = seed;
          build.queries = counted.counts().total();
          build.wall_ns = ns_between(t0, t1);
          rows.push_back(build);
          for (size_t i = 0; i < cfg.pairs.size(); ++i) {
            auto [s, t] = cfg.pairs[i];
            auto q0 = now();
            double est = idx.query(s, t);
            auto q1 = now();
            BenchRow row;
            row.algorithm = "sketch-query";
            row.graph = cfg.graph_id;
            row.s = s;
            row.t = t;
            row.eps = eps;
            row.levels = idx.levels;
            row.seed = seed;
            row.queries = 0;  // answered from the index alone
            row.wall_ns = ns_between(q0, q1);
            row.estimate = est;
            finish_row(row, i);
            rows.push_back(row);
          }
          continue;
        }
        for (size_t i = 0; i < cfg.pairs.size(); ++i) {
          auto [s, t] = cfg.pairs[i];
          EstimateOptions eopts;
          eopts.seed = seed;
          eopts.levels = cfg.levels;
          eopts.kappa = cfg.kappa;
          counted.reset_counts();
          auto t0 = now();
          PairEstimate est = algo == "bidirectional"
                                 ? estimate_resistance(counted, s, t, eps, eopts)
                                 : baseline_estimate(counted, s, t, eps, eopts);
          auto t1 = now();
          BenchRow row;
          row.algorithm = algo;
          row.graph = cfg.graph_id;
          row.s = s;
          row.t = t;
          row.eps = eps;
          row.levels = est.levels;
          row.seed = seed;
          row.queries = counted.counts().total();
          row.wall_ns = ns_between(t0, t1);
          row.estimate = est.value;
          finish_row(row, i);
          rows.push_back(row);
        }
      }
    }
  }
  return rows;
}

inline void write_csv(const std::vector<BenchRow>& rows, std::ostream& out) {
  auto fmt = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  out << kBenchCsvHeader << '\n';
  for (const auto& row : rows) {
    out << row.algorithm << ',' << row.graph << ',' << row.s << ',' << row.t << ','
        << fmt(row.eps) << ',' << row.levels << ',' << row.seed << ',' << row.queries << ','
        << row.wall_ns << ',' << fmt(row.estimate) << ',' << fmt(row.exact) << ','
        << fmt(row.rel_error) << '\n';
  }
}

}  // namespace ertk
