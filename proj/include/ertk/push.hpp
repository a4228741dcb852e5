#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "ertk/dense_walk.hpp"
#include "ertk/flat_map.hpp"
#include "ertk/graph.hpp"

namespace ertk {

// State of the deterministic push phase for one source vertex.
//
// The invariant maintained by every push, exactly in exact arithmetic:
//
//   profile = q + sum_{i=0..levels} sum_{l=0..levels-i} M^l r_i
//
// where M is the lazy walk operator and r_i = residuals[i]. Residual mass
// at (w, i) still owes the profile its next levels-i diffusion steps; q
// holds mass that has been fully accounted. Pushes at level i write only
// level i+1, so each level is frozen once processing reaches it and every
// vertex is pushed at most once per level.
struct PushProfile {
  uint32_t source = 0;
  uint32_t levels = 0;
  double r_max = 0.0;
  uint64_t pushes = 0;
  // false when push_limit stopped the run early; the invariant above still
  // holds for the partial state
  bool finished = true;
  flat_map<uint32_t, double> q;
  std::vector<flat_map<uint32_t, double>> residuals;
};

// Push until every residual entry satisfies r_i(w) <= (r_max / levels^2) * deg(w).
// Vertices are processed level by level, in vertex order within a level, so
// the result is bit-for-bit reproducible. levels == 0 returns the initial
// half-unit residual untouched (a length-0 walk resolves it exactly).
//
// Each push moves more than r_max/levels^2 of weighted residual mass out of
// a budget of (levels+1)/2, so pushes <= (levels+1) * levels^2 / (2 r_max).
template <GraphLike G>
PushProfile push_profile(const G& g, uint32_t source, uint32_t levels, double r_max,
                         uint64_t push_limit = UINT64_MAX) {
  if (source >= g.vertex_count()) throw std::out_of_range("push_profile: source out of range");
  if (!(r_max > 0.0)) throw std::invalid_argument("push_profile: r_max must be positive");

  PushProfile out;
  out.source = source;
  out.levels = levels;
  out.r_max = r_max;
  out.residuals.resize(levels + 1);
  out.residuals[0][source] = 0.5;
  if (levels == 0) return out;

  double tau = r_max / (static_cast<double>(levels) * static_cast<double>(levels));
  for (uint32_t i = 0; i <= levels; ++i) {
    auto& cur = out.residuals[i];
    flat_map<uint32_t, double>* nxt = i < levels ? &out.residuals[i + 1] : nullptr;
    for (auto& [w, val] : cur.sorted_items()) {
      if (!(val > tau * g.degree(w))) continue;
      if (out.pushes == push_limit) {
        out.finished = false;
        cur.drop_zeros();
        return out;
      }
      ++out.pushes;
      out.q[w] += val;
      cur[w] = 0.0;
      if (nxt) {
        uint32_t d = g.degree(w);
        (*nxt)[w] += 0.5 * val;
        double share = 0.5 * val / d;
        for (uint32_t j = 0; j < d; ++j) (*nxt)[g.neighbor(w, j)] += share;
      }
    }
    cur.drop_zeros();
  }
  return out;
}

// Per-visit scores for resolving a push profile's residuals by sampling.
// A lazy walk from v that sits at w after k steps contributes
//
//   score(w, k) = (sum_{i=0..levels-k} r_i(w)) / deg(w)
//
// and deg(v) times the mean contribution estimates profile(v) - q(v)
// unbiasedly (walk reversibility). After a finished push phase every score
// is at most (levels+1)/levels^2 * r_max.
class ResidualScores {
 public:
  template <GraphLike G>
  ResidualScores(const G& g, const PushProfile& prof)
      : levels_(prof.levels), offset_(g.vertex_count(), -1) {
    uint32_t stride = levels_ + 1;
    size_t slots = 0;
    for (const auto& level : prof.residuals)
      level.for_each([&](uint32_t w, double) {
        if (offset_[w] < 0) {
          offset_[w] = static_cast<int64_t>(slots);
          vertices_.push_back(w);
          slots += stride;
        }
      });
    pool_.assign(slots, 0.0);
    for (uint32_t i = 0; i <= levels_; ++i)
      prof.residuals[i].for_each(
          [&](uint32_t w, double val) { pool_[offset_[w] + (levels_ - i)] += val; });
    for (uint32_t w : vertices_) {
      double* row = pool_.data() + offset_[w];
      for (uint32_t k = levels_; k-- > 0;) row[k] += row[k + 1];
      double inv_deg = 1.0 / g.degree(w);
      for (uint32_t k = 0; k <= levels_; ++k) row[k] *= inv_deg;
    }
  }

  double score(uint32_t w, uint32_t k) const {
    int64_t o = offset_[w];
    return o < 0 ? 0.0 : pool_[o + k];
  }

  double max_score() const {
    double m = 0.0;
    for (double v : pool_) m = std::max(m, v);
    return m;
  }

  uint32_t levels() const { return levels_; }
  const std::vector<uint32_t>& vertices() const { return vertices_; }

 private:
  uint32_t levels_;
  std::vector<int64_t> offset_;
  std::vector<uint32_t> vertices_;
  std::vector<double> pool_;
};

// Largest entrywise gap between the true profile and the push invariant's
// reconstruction of it, evaluated densely. Pure floating-point noise for a
// correct implementation, whether or not the push phase ran to completion.
template <GraphLike G>
double profile_defect(const G& g, const PushProfile& prof) {
  uint32_t n = g.vertex_count();
  std::vector<double> p = walk_profile(g, prof.source, prof.levels);
  std::vector<double> acc(n, 0.0), scratch;
  auto add_residuals_up_to = [&](uint32_t top) {
    for (uint32_t i = 0; i <= top; ++i)
      prof.residuals[i].for_each([&](uint32_t w, double val) { acc[w] += val; });
  };
  add_residuals_up_to(0);
  for (uint32_t j = prof.levels; j-- > 0;) {
    lazy_step_dense(g, acc, scratch);
    add_residuals_up_to(prof.levels - j);
  }
  double defect = 0.0;
  for (uint32_t v = 0; v < n; ++v)
    defect = std::max(defect, std::abs(p[v] - prof.q.get(v) - acc[v]));
  return defect;
}

// Deviation of ||q||_1 + sum_i (levels+1-i) ||r_i||_1 from (levels+1)/2.
// Conserved exactly by every push, so again floating-point noise only.
inline double weighted_mass_defect(const PushProfile& prof) {
  double total = 0.0;
  prof.q.for_each([&](uint32_t, double v) { total += v; });
  for (uint32_t i = 0; i <= prof.levels; ++i) {
    double mass = 0.0;
    prof.residuals[i].for_each([&](uint32_t, double v) { mass += v; });
    total += (prof.levels + 1.0 - i) * mass;
  }
  return std::abs(total - (prof.levels + 1.0) / 2.0);
}

}  // namespace ertk
