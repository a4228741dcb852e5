#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ertk/exact.hpp"
#include "ertk/flat_map.hpp"
#include "ertk/graph.hpp"
#include "ertk/rng.hpp"
#include "ertk/spectral.hpp"

namespace ertk {

// d-regular simple graph from the pairing model: pair up n*d half-edge
// stubs, then repair loops and repeated edges with random double-edge
// switches. A switch is applied only when it removes a defect without
// introducing one, which preserves regularity and terminates fast; expecting
// the raw pairing to come out simple would instead succeed with probability
// about exp(-(d*d-1)/4), hopeless for double-digit degrees. A stuck repair
// restarts from a fresh pairing.
inline Graph random_regular_graph(uint32_t n, uint32_t d, uint64_t seed,
                                  uint32_t max_tries = 1000) {
  if (d < 1 || d >= n) throw std::invalid_argument("random_regular_graph: need 1 <= d < n");
  if ((uint64_t(n) * d) % 2 != 0)
    throw std::invalid_argument("random_regular_graph: n*d must be even");
  WalkRng rng = WalkRng(seed).derive(0x5e6ab1c2ULL);
  size_t half = size_t(n) * d / 2;
  std::vector<uint32_t> stubs(size_t(n) * d);
  auto key = [](uint32_t a, uint32_t b) {
    return (uint64_t(std::min(a, b)) << 32) | std::max(a, b);
  };
  for (uint32_t attempt = 0; attempt < max_tries; ++attempt) {
    for (size_t i = 0; i < stubs.size(); ++i) stubs[i] = static_cast<uint32_t>(i / d);
    for (size_t i = stubs.size(); i > 1; --i)
      std::swap(stubs[i - 1], stubs[rng.next_below(static_cast<uint32_t>(i))]);
    std::vector<std::pair<uint32_t, uint32_t>> edges(half);
    flat_map<uint64_t, uint32_t> multiplicity;
    multiplicity.reserve(half);
    for (size_t i = 0; i < half; ++i) {
      edges[i] = {stubs[2 * i], stubs[2 * i + 1]};
      ++multiplicity[key(edges[i].first, edges[i].second)];
    }
    auto defective = [&](size_t i) {
      auto [a, b] = edges[i];
      return a == b || multiplicity.get(key(a, b)) > 1;
    };
    std::vector<size_t> pending(half);
    for (size_t i = 0; i < half; ++i) pending[i] = i;
    uint64_t budget = 200 * half + 1000;
    while (!pending.empty() && budget > 0) {
      size_t i = pending.back();
      pending.pop_back();
      while (defective(i) && budget > 0) {
        --budget;
        size_t j = rng.next_below(static_cast<uint32_t>(half));
        if (j == i) continue;
        auto [a, b] = edges[i];
        auto [c, d2] = edges[j];
        // try both pairings of the four endpoints
        for (int flip = 0; flip < 2; ++flip) {
          if (flip) std::swap(c, d2);
          if (a == c || b == d2 || key(a, c) == key(b, d2)) continue;
          if (multiplicity.get(key(a, c)) > 0 || multiplicity.get(key(b, d2)) > 0) continue;
          --multiplicity[key(a, b)];
          --multiplicity[key(edges[j].first, edges[j].second)];
          edges[i] = {a, c};
          edges[j] = {b, d2};
          ++multiplicity[key(a, c)];
          ++multiplicity[key(b, d2)];
          pending.push_back(j);
          break;
        }
      }
    }
    bool simple = true;
    for (size_t i = 0; i < half && simple; ++i) simple = !defective(i);
    if (!simple) continue;  // stuck, redraw the pairing
    for (auto& [a, b] : edges)
      if (a > b) std::swap(a, b);
    return Graph::from_edges(n, edges);
  }
  throw std::runtime_error("random_regular_graph: repair did not converge after " +
                           std::to_string(max_tries) + " pairings");
}

struct GapParams {
  uint32_t n1 = 0;   // expander core size
  uint32_t n2 = 0;   // pendant pool size; 0 picks ceil(2 eps d_s)
  uint32_t d = 0;    // expander degree
  uint32_t d_s = 0;  // degree of the probe vertex s
  double eps = 0.0;
  uint64_t seed = 1;
};

// Two graphs that agree everywhere except where s attaches. Core vertices
// are 0..n1-1, pendants n1..n1+n2-1, then s and t. The hub t is adjacent to
// every core and pendant vertex; s and t are never adjacent. In g_full all
// d_s edges of s land in the core; g_split reroutes d_s - x_weak of them to
// pendants, where any current they carry must cross two unit edges.
struct GapPair {
  Graph g_full, g_split;
  uint32_t s = 0, t = 0;
  uint32_t n1 = 0, n2 = 0, d = 0, d_s = 0;
  uint32_t x_weak = 0;  // core edges of s that g_split keeps
  double eps = 0.0;
  // parameter-regime checks for the distinguishability argument: the core
  // degree must dominate both d_s ln(n1) and ln(n1)^2, and the core must be
  // large relative to d^3
  bool regime_degree = false;
  bool regime_size = false;
};

inline GapPair build_gap_pair(const GapParams& params) {
  GapPair out;
  out.n1 = params.n1;
  out.d = params.d;
  out.d_s = params.d_s;
  out.eps = params.eps;
  if (params.n1 < 2) throw std::invalid_argument("build_gap_pair: n1 must be at least 2");
  if (!(params.eps > 0.0 && params.eps < 1.0))
    throw std::invalid_argument("build_gap_pair: eps must be in (0, 1)");
  if (params.d_s < 1 || params.d_s > params.n1)
    throw std::invalid_argument("build_gap_pair: need 1 <= d_s <= n1");

  uint32_t x = static_cast<uint32_t>(std::ceil((1.0 - params.eps) * params.d_s));
  if (x >= params.d_s)
    throw std::invalid_argument(
        "build_gap_pair: eps * d_s rounds to zero rerouted edges, the two graphs would coincide");
  uint32_t moved = params.d_s - x;
  out.x_weak = x;
  out.n2 = params.n2 ? params.n2
                     : static_cast<uint32_t>(std::ceil(2.0 * params.eps * params.d_s));
  if (out.n2 < moved)
    throw std::invalid_argument("build_gap_pair: pendant pool smaller than rerouted edge count");

  Graph core = random_regular_graph(params.n1, params.d, params.seed);
  out.s = params.n1 + out.n2;
  out.t = out.s + 1;
  uint32_t n = out.t + 1;

  std::vector<std::pair<uint32_t, uint32_t>> shared;
  for (uint32_t u = 0; u < params.n1; ++u)
    for (uint32_t v : core.neighbors(u))
      if (v > u) shared.emplace_back(u, v);
  for (uint32_t v = 0; v < out.s; ++v) shared.emplace_back(v, out.t);

  std::vector<std::pair<uint32_t, uint32_t>> full_edges = shared;
  for (uint32_t i = 0; i < params.d_s; ++i) full_edges.emplace_back(i, out.s);
  out.g_full = Graph::from_edges(n, full_edges);

  std::vector<std::pair<uint32_t, uint32_t>> split_edges = std::move(shared);
  for (uint32_t i = 0; i < x; ++i) split_edges.emplace_back(i, out.s);
  for (uint32_t i = 0; i < moved; ++i) split_edges.emplace_back(params.n1 + i, out.s);
  out.g_split = Graph::from_edges(n, split_edges);

  double ln_n1 = std::log(static_cast<double>(params.n1));
  out.regime_degree = params.d >= std::max(params.d_s * ln_n1, ln_n1 * ln_n1);
  out.regime_size = static_cast<double>(params.n1) >= 2.0 * std::pow(params.d, 3);
  return out;
}

struct GapReport {
  double r_full = 0.0;   // exact s-t resistance with all edges in the core
  double r_split = 0.0;  // exact s-t resistance after rerouting
  double r_core_side = 0.0;     // split graph, core side alone
  double r_pendant_side = 0.0;  // split graph, pendant side alone
  double pendant_closed_form = 0.0;  // 2 / (d_s - x_weak)
  double pendant_defect = 0.0;       // |r_pendant_side - pendant_closed_form|
  double parallel_defect = 0.0;      // |1/r_split - 1/r_core_side - 1/r_pendant_side|
  double gap_ratio = 0.0;            // (r_split - r_full) / r_full
  double lambda2 = 0.0;              // measured spectral gap of the core
  bool regime_degree = false;
  bool regime_size = false;
};

// Exact-oracle audit of a gap pair: the pendant side must match its closed
// form, the two sides must combine like parallel resistors, and the rerouted
// graph must show strictly higher resistance.
inline GapReport verify_gap(const GapPair& pair) {
  GapReport rep;
  rep.regime_degree = pair.regime_degree;
  rep.regime_size = pair.regime_size;

  std::vector<uint32_t> core_side(pair.n1), pendant_side(pair.n2);
  for (uint32_t i = 0; i < pair.n1; ++i) core_side[i] = i;
  for (uint32_t i = 0; i < pair.n2; ++i) pendant_side[i] = pair.n1 + i;

  rep.r_full = exact_resistance(pair.g_full, pair.s, pair.t);
  ParallelResistances split =
      parallel_resistances(pair.g_split, pair.s, pair.t, core_side, pendant_side);
  rep.r_split = split.whole;
  rep.r_core_side = split.via_a;
  rep.r_pendant_side = split.via_b;
  rep.pendant_closed_form = 2.0 / (pair.d_s - pair.x_weak);
  rep.pendant_defect = std::abs(rep.r_pendant_side - rep.pendant_closed_form);
  rep.parallel_defect =
      std::abs(1.0 / rep.r_split - 1.0 / rep.r_core_side - 1.0 / rep.r_pendant_side);
  rep.gap_ratio = (rep.r_split - rep.r_full) / rep.r_full;

  Graph core = induced_subgraph(pair.g_full, core_side);
  rep.lambda2 = estimate_spectral(core).lambda2;
  return rep;
}

}  // namespace ertk
