#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ertk/bench.hpp"
#include "ertk/estimator.hpp"
#include "ertk/exact.hpp"
#include "ertk/graph.hpp"
#include "ertk/lower_bound.hpp"
#include "ertk/sketch.hpp"
#include "ertk/spectral.hpp"

using json = nlohmann::json;

namespace {

ertk::Graph load_graph_logged(const std::string& path) {
  ertk::LoadResult res = ertk::load_edge_list(path);
  if (res.stats.self_loops || res.stats.duplicate_edges)
    std::cerr << "note: " << path << ": dropped " << res.stats.self_loops
              << " self loops, merged " << res.stats.duplicate_edges << " duplicate edges\n";
  if (!res.graph.external_ids().empty())
    std::cerr << "note: " << path
              << ": labels are not 0..n-1, compacted in first-appearance order\n";
  return std::move(res.graph);
}

// vertex arguments name labels as written in the file
uint32_t resolve_vertex(const ertk::Graph& g, uint64_t label, const std::string& what) {
  const auto& ids = g.external_ids();
  if (ids.empty()) {
    if (label >= g.vertex_count())
      throw std::runtime_error(what + ": vertex " + std::to_string(label) + " out of range");
    return static_cast<uint32_t>(label);
  }
  auto it = std::find(ids.begin(), ids.end(), label);
  if (it == ids.end())
    throw std::runtime_error(what + ": unknown vertex label " + std::to_string(label));
  return static_cast<uint32_t>(it - ids.begin());
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  size_t begin = 0;
  while (begin <= text.size()) {
    size_t end = text.find(sep, begin);
    if (end == std::string::npos) end = text.size();
    parts.push_back(text.substr(begin, end - begin));
    begin = end + 1;
  }
  return parts;
}

uint64_t parse_u64(const std::string& text, const std::string& what) {
  try {
    size_t used = 0;
    uint64_t v = std::stoull(text, &used);
    if (used == text.size()) return v;
  } catch (...) {
  }
  throw std::runtime_error(what + ": expected a non-negative integer, got '" + text + "'");
}

double parse_f64(const std::string& text, const std::string& what) {
  try {
    size_t used = 0;
    double v = std::stod(text, &used);
    if (used == text.size()) return v;
  } catch (...) {
  }
  throw std::runtime_error(what + ": expected a number, got '" + text + "'");
}

void write_edge_list(const ertk::Graph& g, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (uint32_t u = 0; u < g.vertex_count(); ++u)
    for (uint32_t v : g.neighbors(u))
      if (v > u) out << u << ' ' << v << '\n';
  out.flush();
  if (!out) throw std::runtime_error("write failed for " + path);
}

void emit(const json& j) { std::cout << j.dump(2) << '\n'; }

struct LevelFlags {
  int64_t levels = -1;
  double kappa = -1.0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--L", levels, "walk length (default: from the measured spectrum)");
    cmd->add_option("--kappa", kappa, "condition estimate for the default walk length");
  }
  std::optional<uint32_t> levels_opt() const {
    if (levels < 0) return std::nullopt;
    return static_cast<uint32_t>(levels);
  }
  std::optional<double> kappa_opt() const {
    if (kappa < 0) return std::nullopt;
    return kappa;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"effective resistance estimation toolkit"};
  app.require_subcommand(1);

  // ---- exact ----
  struct {
    std::string graph;
    uint64_t s = 0, t = 0;
  } ex;
  {
    auto* cmd = app.add_subcommand("exact", "dense-solver resistance for one pair");
    cmd->add_option("--graph", ex.graph, "edge list file")->required();
    cmd->add_option("--s", ex.s, "first endpoint")->required();
    cmd->add_option("--t", ex.t, "second endpoint")->required();
    cmd->callback([&] {
      ertk::Graph g = load_graph_logged(ex.graph);
      uint32_t s = resolve_vertex(g, ex.s, "exact");
      uint32_t t = resolve_vertex(g, ex.t, "exact");
      double value = ertk::exact_resistance(g, s, t);
      emit(json{{"command", "exact"},
                {"graph", ex.graph},
                {"n", g.vertex_count()},
                {"m", g.edge_count()},
                {"s", ex.s},
                {"t", ex.t},
                {"value", value}});
    });
  }

  // ---- estimate / baseline ----
  struct {
    std::string graph;
    uint64_t s = 0, t = 0;
    double eps = 0.1;
    uint64_t seed = 1;
    LevelFlags lf;
    int64_t mom_groups = -1;
    int64_t walks = -1;
  } es, bl;
  auto add_estimate_cmd = [&](const char* name, const char* help, auto& opt, bool bidirectional) {
    auto* cmd = app.add_subcommand(name, help);
    cmd->add_option("--graph", opt.graph, "edge list file")->required();
    cmd->add_option("--s", opt.s, "first endpoint")->required();
    cmd->add_option("--t", opt.t, "second endpoint")->required();
    cmd->add_option("--eps", opt.eps, "relative accuracy target in (0,1)")->required();
    cmd->add_option("--seed", opt.seed, "random seed (default 1)");
    opt.lf.attach(cmd);
    cmd->add_option("--mom-groups", opt.mom_groups, "median-of-means group count");
    cmd->add_option("--walks", opt.walks, "walks per endpoint (overrides the eps-driven count)");
    cmd->callback([&, name, bidirectional] {
      ertk::Graph g = load_graph_logged(opt.graph);
      uint32_t s = resolve_vertex(g, opt.s, name);
      uint32_t t = resolve_vertex(g, opt.t, name);
      ertk::EstimateOptions eopts;
      eopts.seed = opt.seed;
      eopts.levels = opt.lf.levels_opt();
      eopts.kappa = opt.lf.kappa_opt();
      if (opt.mom_groups >= 0) eopts.mom_groups = static_cast<uint32_t>(opt.mom_groups);
      if (opt.walks >= 0) eopts.walk_count = static_cast<uint64_t>(opt.walks);
      ertk::PairEstimate est = bidirectional ? ertk::estimate_resistance(g, s, t, opt.eps, eopts)
                                             : ertk::baseline_estimate(g, s, t, opt.eps, eopts);
      emit(json{{"command", name},
                {"graph", opt.graph},
                {"n", g.vertex_count()},
                {"m", g.edge_count()},
                {"s", opt.s},
                {"t", opt.t},
                {"eps", opt.eps},
                {"seed", opt.seed},
                {"value", est.value},
                {"levels", est.levels},
                {"r_max", est.r_max},
                {"min_degree", est.min_degree},
                {"walks_per_source", est.walks_per_source},
                {"pushes", est.pushes},
                {"mom_groups", est.mom_groups},
                {"profile",
                 json{{"p_ss", est.p_ss}, {"p_st", est.p_st}, {"p_ts", est.p_ts}, {"p_tt", est.p_tt}}}});
    });
  };
  add_estimate_cmd("estimate", "bidirectional single-pair estimate", es, true);
  add_estimate_cmd("baseline", "sampling-only single-pair estimate", bl, false);

  // ---- build-index ----
  struct {
    std::string graph, out;
    double eps = 0.1;
    uint64_t seed = 1;
    LevelFlags lf;
    int64_t mom_groups = -1;
    uint32_t workers = 1;
  } bi;
  {
    auto* cmd = app.add_subcommand("build-index", "precompute the all-pairs sketch");
    cmd->add_option("--graph", bi.graph, "edge list file")->required();
    cmd->add_option("--out", bi.out, "output index file")->required();
    cmd->add_option("--eps", bi.eps, "relative accuracy target in (0,1)")->required();
    cmd->add_option("--seed", bi.seed, "random seed (default 1)");
    cmd->add_option("--workers", bi.workers, "build threads (default 1)");
    bi.lf.attach(cmd);
    cmd->add_option("--mom-groups", bi.mom_groups, "median-of-means group count");
    cmd->callback([&] {
      ertk::Graph g = load_graph_logged(bi.graph);
      bool relabeled = !g.external_ids().empty();
      if (relabeled)
        std::cerr << "note: the index stores compacted ids; query with those, not file labels\n";
      ertk::IndexOptions iopts;
      iopts.seed = bi.seed;
      iopts.levels = bi.lf.levels_opt();
      iopts.kappa = bi.lf.kappa_opt();
      iopts.workers = bi.workers;
      if (bi.mom_groups >= 0) iopts.mom_groups = static_cast<uint32_t>(bi.mom_groups);
      ertk::ResistanceIndex idx = ertk::build_index(g, bi.eps, iopts);
      ertk::save_index(idx, bi.out);
      emit(json{{"command", "build-index"},
                {"graph", bi.graph},
                {"out", bi.out},
                {"n", idx.vertex_count},
                {"m", idx.edge_count},
                {"levels", idx.levels},
                {"eps", idx.eps},
                {"r_max", idx.r_max},
                {"seed", idx.seed},
                {"workers", bi.workers},
                {"entries", idx.entry_count()},
                {"bytes", std::filesystem::file_size(bi.out)},
                {"relabeled", relabeled}});
    });
  }

  // ---- query ----
  struct {
    std::string index;
    uint64_t s = 0, t = 0;
  } qr;
  {
    auto* cmd = app.add_subcommand("query", "answer one pair from a saved index");
    cmd->add_option("--index", qr.index, "index file from build-index")->required();
    cmd->add_option("--s", qr.s, "first endpoint")->required();
    cmd->add_option("--t", qr.t, "second endpoint")->required();
    cmd->callback([&] {
      ertk::ResistanceIndex idx = ertk::load_index(qr.index);
      if (qr.s >= idx.vertex_count || qr.t >= idx.vertex_count)
        throw std::runtime_error("query: vertex out of range");
      double value = idx.query(static_cast<uint32_t>(qr.s), static_cast<uint32_t>(qr.t));
      emit(json{{"command", "query"},
                {"index", qr.index},
                {"n", idx.vertex_count},
                {"levels", idx.levels},
                {"eps", idx.eps},
                {"s", qr.s},
                {"t", qr.t},
                {"value", value}});
    });
  }

  // ---- gen-lowerbound ----
  struct {
    uint64_t n1 = 0, n2 = 0, d = 0, d_s = 0;
    double eps = 0.5;
    uint64_t seed = 1;
    std::string prefix;
    bool verify = false;
  } gl;
  {
    auto* cmd = app.add_subcommand(
        "gen-lowerbound", "emit a pair of graphs whose resistance gap defeats sublinear probes");
    cmd->add_option("--n1", gl.n1, "expander core size")->required();
    cmd->add_option("--d", gl.d, "core degree")->required();
    cmd->add_option("--d-s", gl.d_s, "degree of the probe vertex")->required();
    cmd->add_option("--eps", gl.eps, "fraction of probe edges rerouted")->required();
    cmd->add_option("--n2", gl.n2, "pendant pool size (default: 2 eps d_s, rounded up)");
    cmd->add_option("--seed", gl.seed, "random seed (default 1)");
    cmd->add_option("--out-prefix", gl.prefix, "write <prefix>_full.edges and <prefix>_split.edges")
        ->required();
    cmd->add_flag("--verify", gl.verify, "audit the pair with the dense solver");
    cmd->callback([&] {
      ertk::GapParams params;
      params.n1 = static_cast<uint32_t>(gl.n1);
      params.n2 = static_cast<uint32_t>(gl.n2);
      params.d = static_cast<uint32_t>(gl.d);
      params.d_s = static_cast<uint32_t>(gl.d_s);
      params.eps = gl.eps;
      params.seed = gl.seed;
      ertk::GapPair pair = ertk::build_gap_pair(params);
      std::string full_path = gl.prefix + "_full.edges";
      std::string split_path = gl.prefix + "_split.edges";
      write_edge_list(pair.g_full, full_path);
      write_edge_list(pair.g_split, split_path);
      json out{{"command", "gen-lowerbound"},
               {"params",
                json{{"n1", pair.n1},
                     {"n2", pair.n2},
                     {"d", pair.d},
                     {"d_s", pair.d_s},
                     {"eps", pair.eps},
                     {"seed", gl.seed}}},
               {"s", pair.s},
               {"t", pair.t},
               {"x_weak", pair.x_weak},
               {"files", json{{"full", full_path}, {"split", split_path}}},
               {"regime", json{{"degree", pair.regime_degree}, {"size", pair.regime_size}}},
               {"verify", nullptr}};
      if (gl.verify) {
        ertk::GapReport rep = ertk::verify_gap(pair);
        out["verify"] = json{{"r_full", rep.r_full},
                             {"r_split", rep.r_split},
                             {"r_core_side", rep.r_core_side},
                             {"r_pendant_side", rep.r_pendant_side},
                             {"pendant_closed_form", rep.pendant_closed_form},
                             {"pendant_defect", rep.pendant_defect},
                             {"parallel_defect", rep.parallel_defect},
                             {"gap_ratio", rep.gap_ratio},
                             {"lambda2", rep.lambda2}};
      }
      emit(out);
    });
  }

  // ---- bench ----
  struct {
    std::string graph, graph_id, pairs, eps_list, seeds = "1", algos = "bidirectional,baseline";
    LevelFlags lf;
    bool no_exact = false;
    uint32_t workers = 1;
  } bn;
  {
    auto* cmd = app.add_subcommand("bench", "timed sweep over pairs, accuracies, and seeds (CSV)");
    cmd->add_option("--graph", bn.graph, "edge list file")->required();
    cmd->add_option("--graph-id", bn.graph_id, "graph name for the CSV (default: file path)");
    cmd->add_option("--pairs", bn.pairs, "comma list of s:t pairs, e.g. 0:5,3:7")->required();
    cmd->add_option("--eps-list", bn.eps_list, "comma list of accuracy targets")->required();
    cmd->add_option("--seeds", bn.seeds, "comma list of seeds (default 1)");
    cmd->add_option("--algos", bn.algos,
                    "comma list from bidirectional, baseline, sketch (default: first two)");
    bn.lf.attach(cmd);
    cmd->add_flag("--no-exact", bn.no_exact, "skip the dense solver columns");
    cmd->add_option("--workers", bn.workers, "sketch build threads (default 1)");
    cmd->callback([&] {
      ertk::Graph g = load_graph_logged(bn.graph);
      ertk::BenchConfig cfg;
      cfg.graph_id = bn.graph_id.empty() ? bn.graph : bn.graph_id;
      for (const auto& token : split(bn.pairs, ',')) {
        auto halves = split(token, ':');
        if (halves.size() != 2) throw std::runtime_error("bench: malformed pair '" + token + "'");
        cfg.pairs.emplace_back(resolve_vertex(g, parse_u64(halves[0], "bench"), "bench"),
                               resolve_vertex(g, parse_u64(halves[1], "bench"), "bench"));
      }
      for (const auto& token : split(bn.eps_list, ','))
        cfg.eps_list.push_back(parse_f64(token, "bench"));
      for (const auto& token : split(bn.seeds, ',')) cfg.seeds.push_back(parse_u64(token, "bench"));
      cfg.algos = split(bn.algos, ',');
      cfg.levels = bn.lf.levels_opt();
      cfg.kappa = bn.lf.kappa_opt();
      cfg.with_exact = !bn.no_exact;
      cfg.workers = bn.workers;
      std::vector<ertk::BenchRow> rows = ertk::run_bench(g, cfg);
      ertk::write_csv(rows, std::cout);
      std::cerr << "bench: " << rows.size() << " rows\n";
    });
  }

  // ---- spectral ----
  struct {
    std::string graph;
    double tol = 1e-10;
    uint64_t max_iters = 200000;
    uint64_t seed = 1;
  } sp;
  {
    auto* cmd = app.add_subcommand("spectral", "normalized-Laplacian extremes by power iteration");
    cmd->add_option("--graph", sp.graph, "edge list file")->required();
    cmd->add_option("--tol", sp.tol, "Rayleigh-drift stopping tolerance (default 1e-10)");
    cmd->add_option("--max-iters", sp.max_iters, "iteration cap (default 200000)");
    cmd->add_option("--seed", sp.seed, "random seed (default 1)");
    cmd->callback([&] {
      ertk::Graph g = load_graph_logged(sp.graph);
      ertk::SpectralOptions sopts;
      sopts.tol = sp.tol;
      sopts.max_iters = static_cast<uint32_t>(sp.max_iters);
      sopts.seed = sp.seed;
      ertk::SpectralEstimate est = ertk::estimate_spectral(g, sopts);
      emit(json{{"command", "spectral"},
                {"graph", sp.graph},
                {"n", g.vertex_count()},
                {"m", g.edge_count()},
                {"lambda2", est.lambda2},
                {"lambda_max", est.lambda_max},
                {"kappa", est.kappa},
                {"iterations",
                 json{{"lambda2", est.iters_lambda2}, {"lambda_max", est.iters_lambda_max}}}});
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
