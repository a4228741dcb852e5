#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "ertk/graph.hpp"

namespace ertk {

// One exact step of the lazy walk operator on a distribution:
// y'(v) = y(v)/2 + sum_{w ~ v} y(w)/(2 deg(w)).
template <GraphLike G>
void lazy_step_dense(const G& g, std::vector<double>& y, std::vector<double>& scratch) {
  uint32_t n = g.vertex_count();
  scratch.assign(n, 0.0);
  for (uint32_t w = 0; w < n; ++w) {
    double yw = y[w];
    if (yw == 0.0) continue;
    uint32_t d = g.degree(w);
    scratch[w] += 0.5 * yw;
    double share = 0.5 * yw / d;
    for (uint32_t i = 0; i < d; ++i) scratch[g.neighbor(w, i)] += share;
  }
  y.swap(scratch);
}

// Cumulative occupancy of the truncated lazy walk started at u:
// profile(v) = 1/2 * sum_{l=0..depth} Pr[walk at step l sits at v].
// This is the dense ground truth that the push and sampling machinery
// approximate; its entries sum to (depth+1)/2 exactly.
template <GraphLike G>
std::vector<double> walk_profile(const G& g, uint32_t u, uint32_t depth) {
  uint32_t n = g.vertex_count();
  if (u >= n) throw std::out_of_range("walk_profile: vertex out of range");
  std::vector<double> cur(n, 0.0), profile(n, 0.0), scratch;
  cur[u] = 1.0;
  for (uint32_t v = 0; v < n; ++v) profile[v] += 0.5 * cur[v];
  for (uint32_t l = 1; l <= depth; ++l) {
    lazy_step_dense(g, cur, scratch);
    for (uint32_t v = 0; v < n; ++v) profile[v] += 0.5 * cur[v];
  }
  return profile;
}

// Depth-truncated resistance: the four-term recombination of walk profiles,
//   p_s(s)/d_s - p_s(t)/d_t - p_t(s)/d_s + p_t(t)/d_t.
// Nondecreasing in depth, and converges to the exact resistance on connected
// graphs since the lazy operator's spectrum off the stationary direction
// lies in [0, 1).
template <GraphLike G>
double truncated_resistance(const G& g, uint32_t s, uint32_t t, uint32_t depth) {
  if (s >= g.vertex_count() || t >= g.vertex_count())
    throw std::out_of_range("truncated_resistance: vertex out of range");
  if (s == t) return 0.0;
  std::vector<double> ps = walk_profile(g, s, depth);
  std::vector<double> pt = walk_profile(g, t, depth);
  double ds = g.degree(s), dt = g.degree(t);
  return ps[s] / ds - ps[t] / dt - pt[s] / ds + pt[t] / dt;
}

}  // namespace ertk
