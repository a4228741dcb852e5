#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <concepts>
#include <cstdint>
#include <fstream>
#include <istream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ertk/rng.hpp"

namespace ertk {

class parse_error : public std::runtime_error {
 public:
  parse_error(const std::string& msg, size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + msg), line_(line) {}
  size_t line() const { return line_; }

 private:
  size_t line_;
};

// Undirected, unweighted, simple graph in CSR form. Adjacency lists are
// sorted, so neighbor(u, i) is deterministic across builds of the same
// edge set. Loaded graphs get their vertices from edges, so degree >= 1
// except for labels that only ever appeared in stripped self-loops;
// from_edges() with an explicit vertex count may leave isolated vertices.
class Graph {
 public:
  Graph() = default;

  static Graph from_edges(uint32_t n, const std::vector<std::pair<uint32_t, uint32_t>>& edges) {
    Graph g;
    for (auto [u, v] : edges) {
      if (u >= n || v >= n) throw std::invalid_argument("edge endpoint out of range");
      if (u == v) throw std::invalid_argument("self-loop in edge set");
    }
    g.build(n, edges);
    {
      std::vector<std::pair<uint32_t, uint32_t>> canon(edges);
      for (auto& e : canon)
        if (e.first > e.second) std::swap(e.first, e.second);
      std::sort(canon.begin(), canon.end());
      if (std::adjacent_find(canon.begin(), canon.end()) != canon.end())
        throw std::invalid_argument("duplicate edge in edge set");
    }
    return g;
  }

  uint32_t vertex_count() const { return static_cast<uint32_t>(offsets_.size() - 1); }
  uint64_t edge_count() const { return adj_.size() / 2; }

  uint32_t degree(uint32_t u) const {
    return static_cast<uint32_t>(offsets_[u + 1] - offsets_[u]);
  }

  uint32_t neighbor(uint32_t u, uint32_t i) const { return adj_[offsets_[u] + i]; }

  std::span<const uint32_t> neighbors(uint32_t u) const {
    return {adj_.data() + offsets_[u], adj_.data() + offsets_[u + 1]};
  }

  // uniform random vertex
  uint32_t jump(WalkRng& rng) const { return rng.next_below(vertex_count()); }

  bool connected() const { return connected_; }

  // original labels from the loaded edge list; empty when ids were dense already
  const std::vector<uint64_t>& external_ids() const { return ids_; }

  bool has_edge(uint32_t u, uint32_t v) const {
    auto nb = neighbors(u);
    return std::binary_search(nb.begin(), nb.end(), v);
  }

 private:
  void build(uint32_t n, const std::vector<std::pair<uint32_t, uint32_t>>& edges) {
    offsets_.assign(n + 1, 0);
    for (auto [u, v] : edges) {
      ++offsets_[u + 1];
      ++offsets_[v + 1];
    }
    for (uint32_t i = 0; i < n; ++i) offsets_[i + 1] += offsets_[i];
    adj_.resize(edges.size() * 2);
    std::vector<uint64_t> fill(offsets_.begin(), offsets_.end() - 1);
    for (auto [u, v] : edges) {
      adj_[fill[u]++] = v;
      adj_[fill[v]++] = u;
    }
    for (uint32_t u = 0; u < n; ++u)
      std::sort(adj_.begin() + offsets_[u], adj_.begin() + offsets_[u + 1]);
    connected_ = compute_connected();
  }

  bool compute_connected() const {
    uint32_t n = vertex_count();
    if (n == 0) return false;
    std::vector<uint8_t> seen(n, 0);
    std::vector<uint32_t> stack{0};
    seen[0] = 1;
    uint32_t reached = 1;
    while (!stack.empty()) {
      uint32_t u = stack.back();
      stack.pop_back();
      for (uint32_t v : neighbors(u)) {
        if (!seen[v]) {
          seen[v] = 1;
          ++reached;
          stack.push_back(v);
        }
      }
    }
    return reached == n;
  }

  friend struct GraphBuilder;

  std::vector<uint64_t> offsets_;
  std::vector<uint32_t> adj_;
  std::vector<uint64_t> ids_;
  bool connected_ = false;
};

struct GraphBuilder {
  static Graph assemble(uint32_t n, const std::vector<std::pair<uint32_t, uint32_t>>& edges,
                        std::vector<uint64_t> ids) {
    Graph g;
    g.build(n, edges);
    g.ids_ = std::move(ids);
    return g;
  }
};

struct LoadStats {
  uint64_t duplicate_edges = 0;
  uint64_t self_loops = 0;
  uint64_t comment_lines = 0;
};

struct LoadResult {
  Graph graph;
  LoadStats stats;
};

// Edge list: one "u v" pair per line, '#' starts a comment, blank lines
// ignored. Labels are arbitrary non-negative 64-bit integers and are
// relabeled densely in order of first appearance. Duplicate edges and
// self-loops are dropped and counted.
inline LoadResult parse_edge_list(std::istream& in) {
  std::unordered_map<uint64_t, uint32_t> relabel;
  std::vector<uint64_t> ids;
  std::vector<std::pair<uint32_t, uint32_t>> edges;
  LoadStats stats;

  auto intern = [&](uint64_t label) {
    auto [it, fresh] = relabel.try_emplace(label, static_cast<uint32_t>(ids.size()));
    if (fresh) {
      if (ids.size() == 0xffffffffu) throw std::length_error("too many vertices");
      ids.push_back(label);
    }
    return it->second;
  };

  auto parse_id = [](const std::string& tok, size_t lineno) {
    uint64_t value = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc{} || ptr != tok.data() + tok.size())
      throw parse_error("not a vertex id: '" + tok + "'", lineno);
    return value;
  };

  std::string line, tok;
  std::vector<std::string> toks;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) {
      if (line.find_first_not_of(" \t\r") == hash) ++stats.comment_lines;
      line.erase(hash);
    }
    toks.clear();
    std::istringstream ls(line);
    while (ls >> tok) toks.push_back(tok);
    if (toks.empty()) continue;
    if (toks.size() != 2)
      throw parse_error("expected two vertex ids, got " + std::to_string(toks.size()) +
                            " token(s)",
                        lineno);
    uint64_t a = parse_id(toks[0], lineno);
    uint64_t b = parse_id(toks[1], lineno);
    if (a == b) {
      ++stats.self_loops;
      intern(a);
      continue;
    }
    uint32_t ia = intern(a);  // interned separately: argument order is unspecified
    uint32_t ib = intern(b);
    edges.emplace_back(ia, ib);
  }

  {
    std::vector<std::pair<uint32_t, uint32_t>> canon(edges);
    for (auto& e : canon)
      if (e.first > e.second) std::swap(e.first, e.second);
    std::vector<size_t> order(canon.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](size_t i, size_t j) { return canon[i] < canon[j]; });
    std::vector<std::pair<uint32_t, uint32_t>> dedup;
    dedup.reserve(edges.size());
    for (size_t idx : order) {
      if (!dedup.empty() && dedup.back() == canon[idx]) {
        ++stats.duplicate_edges;
        continue;
      }
      dedup.push_back(canon[idx]);
    }
    edges = std::move(dedup);
  }

  if (edges.empty()) throw parse_error("edge list is empty", lineno);

  bool dense_already = true;
  for (size_t i = 0; i < ids.size(); ++i)
    if (ids[i] != i) {
      dense_already = false;
      break;
    }
  if (dense_already) ids.clear();

  return {GraphBuilder::assemble(static_cast<uint32_t>(relabel.size()), edges, std::move(ids)),
          stats};
}

inline LoadResult load_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open graph file: " + path);
  return parse_edge_list(in);
}

template <class G>
concept GraphLike = requires(const G& g, uint32_t u, uint32_t i, WalkRng& rng) {
  { g.vertex_count() } -> std::convertible_to<uint32_t>;
  { g.edge_count() } -> std::convertible_to<uint64_t>;
  { g.degree(u) } -> std::convertible_to<uint32_t>;
  { g.neighbor(u, i) } -> std::convertible_to<uint32_t>;
  { g.jump(rng) } -> std::convertible_to<uint32_t>;
};

// Lazy walk: at each step stay put with probability 1/2, otherwise move to a
// uniform neighbor. visit(k, v) fires for every step k = 0..length, step 0
// being the start vertex. One rng draw per step: the top bit decides
// stay/move, the remaining bits pick the neighbor.
template <GraphLike G, class Visit>
void walk_visits(const G& g, uint32_t start, uint32_t length, WalkRng& rng, Visit&& visit) {
  uint32_t v = start;
  visit(uint32_t{0}, v);
  for (uint32_t k = 1; k <= length; ++k) {
    uint64_t z = rng.next_u64();
    if (z >> 63) {
      uint32_t d = g.degree(v);
      uint32_t i = static_cast<uint32_t>(
          (static_cast<unsigned __int128>(z << 1) * d) >> 64);
      v = g.neighbor(v, i);
    }
    visit(k, v);
  }
}

template <GraphLike G>
std::vector<uint32_t> lazy_walk(const G& g, uint32_t start, uint32_t length, WalkRng& rng) {
  std::vector<uint32_t> path;
  path.reserve(length + 1);
  walk_visits(g, start, length, rng, [&](uint32_t, uint32_t v) { path.push_back(v); });
  return path;
}

struct QueryCounts {
  uint64_t degree = 0;
  uint64_t neighbor = 0;
  uint64_t jump = 0;
  uint64_t total() const { return degree + neighbor + jump; }
};

// Instrumented view: counts every adjacency-structure query made through it.
// Counters are relaxed atomics so a view shared by parallel workers still
// reports exact totals.
template <GraphLike G>
class CountingGraph {
 public:
  explicit CountingGraph(const G& g) : g_(g) {}

  uint32_t vertex_count() const { return g_.vertex_count(); }
  uint64_t edge_count() const { return g_.edge_count(); }
  bool connected() const
    requires requires(const G& g) { g.connected(); }
  {
    return g_.connected();
  }

  uint32_t degree(uint32_t u) const {
    degree_.fetch_add(1, std::memory_order_relaxed);
    return g_.degree(u);
  }
  uint32_t neighbor(uint32_t u, uint32_t i) const {
    neighbor_.fetch_add(1, std::memory_order_relaxed);
    return g_.neighbor(u, i);
  }
  uint32_t jump(WalkRng& rng) const {
    jump_.fetch_add(1, std::memory_order_relaxed);
    return g_.jump(rng);
  }

  QueryCounts counts() const {
    return {degree_.load(std::memory_order_relaxed),
            neighbor_.load(std::memory_order_relaxed),
            jump_.load(std::memory_order_relaxed)};
  }
  void reset_counts() {
    degree_.store(0, std::memory_order_relaxed);
    neighbor_.store(0, std::memory_order_relaxed);
    jump_.store(0, std::memory_order_relaxed);
  }

 private:
  const G& g_;
  mutable std::atomic<uint64_t> degree_{0};
  mutable std::atomic<uint64_t> neighbor_{0};
  mutable std::atomic<uint64_t> jump_{0};
};

}  // namespace ertk
