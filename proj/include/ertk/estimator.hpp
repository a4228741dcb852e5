#pragma once

#include <algorithm>
#include <bit>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ertk/graph.hpp"
#include "ertk/push.hpp"
#include "ertk/rng.hpp"
#include "ertk/spectral.hpp"

namespace ertk {

struct EstimateOptions {
  uint64_t seed = 1;
  // walk length; defaults to ceil(2 kappa ln(n/eps)), at least 1
  std::optional<uint32_t> levels;
  // condition estimate feeding the default walk length; defaults to a
  // measured spectral estimate, which costs a power iteration
  std::optional<double> kappa;
  // median-of-means group count; defaults to ceil(log2 n)
  std::optional<uint32_t> mom_groups;
  // walks per endpoint; defaults to the eps-driven count
  std::optional<uint64_t> walk_count;
};

struct PairEstimate {
  double value = 0.0;
  // p_xy: occupancy profile of endpoint x read at endpoint y
  double p_ss = 0.0, p_st = 0.0, p_ts = 0.0, p_tt = 0.0;
  uint32_t levels = 0;
  double eps = 0.0;
  double r_max = 0.0;       // 0 for the sampling-only baseline
  uint32_t min_degree = 0;  // min(deg(s), deg(t))
  uint64_t walks_per_source = 0;
  uint64_t pushes = 0;      // both push phases combined
  uint32_t mom_groups = 0;
};

namespace detail {

inline double median_in_place(std::vector<double>& v) {
  size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  if (v.size() % 2) return v[mid];
  double lo = *std::max_element(v.begin(), v.begin() + mid);
  return 0.5 * (lo + v[mid]);
}

inline uint32_t default_mom_groups(uint32_t n) {
  return n <= 2 ? 1 : std::bit_width(n - 1);  // ceil(log2 n)
}

inline uint32_t auto_levels(double kappa, uint32_t n, double eps) {
  double raw = std::ceil(2.0 * kappa * std::log(n / eps));
  return raw < 1.0 ? 1u : static_cast<uint32_t>(raw);
}

// walks j in [0, walks) belong to group j*groups/walks; sizes differ by at most 1
inline uint64_t group_size(uint64_t walks, uint32_t groups, uint32_t g) {
  auto first_of = [&](uint64_t k) { return (k * walks + groups - 1) / groups; };
  return first_of(g + 1) - first_of(g);
}

// Per-visit scores for two residual systems, interleaved so one cache line
// serves both: slot offset[w] + 2k + sys is system sys's score for a visit
// to w at step k. offset is -1 for vertices that score zero everywhere.
struct DualScorer {
  uint32_t levels = 0;
  std::vector<int64_t> offset;
  std::vector<double> pool;
};

template <GraphLike G>
DualScorer dual_scorer(const G& g, const ResidualScores& a, const ResidualScores& b) {
  DualScorer sc;
  sc.levels = a.levels();
  sc.offset.assign(g.vertex_count(), -1);
  size_t stride = 2 * (size_t(sc.levels) + 1);
  size_t slots = 0;
  auto claim = [&](uint32_t w) {
    if (sc.offset[w] < 0) {
      sc.offset[w] = static_cast<int64_t>(slots);
      slots += stride;
    }
  };
  for (uint32_t w : a.vertices()) claim(w);
  for (uint32_t w : b.vertices()) claim(w);
  sc.pool.assign(slots, 0.0);
  for (uint32_t w = 0; w < g.vertex_count(); ++w) {
    int64_t off = sc.offset[w];
    if (off < 0) continue;
    for (uint32_t k = 0; k <= sc.levels; ++k) {
      sc.pool[off + 2 * k] = a.score(w, k);
      sc.pool[off + 2 * k + 1] = b.score(w, k);
    }
  }
  return sc;
}

// Runs `walks` lazy walks from `start` and returns, per system, the sum over
// steps k of the median over groups of the group-mean visit score. Walk j
// draws from the stream root.derive(tag, j), so results do not depend on
// evaluation order.
template <GraphLike G>
std::pair<double, double> sampled_residual_mass(const G& g, uint32_t start, const DualScorer& sc,
                                                uint64_t walks, uint32_t groups,
                                                const WalkRng& root, uint64_t tag) {
  uint32_t L = sc.levels;
  std::vector<double> sums((size_t(L) + 1) * groups * 2, 0.0);
  for (uint64_t j = 0; j < walks; ++j) {
    WalkRng wr = root.derive(tag, j);
    size_t gi = static_cast<size_t>(j * groups / walks);
    walk_visits(g, start, L, wr, [&](uint32_t k, uint32_t w) {
      int64_t off = sc.offset[w];
      if (off < 0) return;
      const double* src = sc.pool.data() + off + 2 * k;
      double* dst = sums.data() + (size_t(k) * groups + gi) * 2;
      dst[0] += src[0];
      dst[1] += src[1];
    });
  }
  double out[2] = {0.0, 0.0};
  std::vector<double> means(groups);
  for (uint32_t k = 0; k <= L; ++k) {
    for (int sys = 0; sys < 2; ++sys) {
      for (uint32_t gi = 0; gi < groups; ++gi)
        means[gi] = sums[(size_t(k) * groups + gi) * 2 + sys] / group_size(walks, groups, gi);
      out[sys] += median_in_place(means);
    }
  }
  return {out[0], out[1]};
}

template <GraphLike G>
void validate_pair_query(const G& g, uint32_t s, uint32_t t, double eps, const char* who) {
  uint32_t n = g.vertex_count();
  std::string prefix(who);
  if (s >= n || t >= n) throw std::out_of_range(prefix + ": vertex out of range");
  if (s == t) throw std::invalid_argument(prefix + ": endpoints must differ");
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument(prefix + ": eps must be in (0, 1)");
  if constexpr (requires { g.connected(); }) {
    if (!g.connected()) throw std::invalid_argument(prefix + ": graph must be connected");
  }
}

template <GraphLike G>
uint32_t resolve_levels(const G& g, double eps, std::optional<uint32_t> levels,
                        std::optional<double> kappa, uint64_t seed) {
  if (levels) return *levels;
  double k;
  if (kappa) {
    k = *kappa;
  } else {
    SpectralOptions sopts;
    sopts.seed = seed;
    k = estimate_spectral(g, sopts).kappa;
  }
  return auto_levels(k, g.vertex_count(), eps);
}

}  // namespace detail

// Bidirectional single-pair estimate: deterministic push from both endpoints
// down to per-degree residual r_max = eps / sqrt(min degree), then walks from
// both endpoints resolve the leftover mass. With the default walk length the
// estimate lands within 9 eps relative of the exact resistance with high
// probability.
template <GraphLike G>
PairEstimate estimate_resistance(const G& g, uint32_t s, uint32_t t, double eps,
                                 const EstimateOptions& opts = {}) {
  detail::validate_pair_query(g, s, t, eps, "estimate_resistance");
  uint32_t n = g.vertex_count();
  double ds = g.degree(s), dt = g.degree(t);
  uint32_t d = static_cast<uint32_t>(std::min(ds, dt));
  if (d == 0) throw std::invalid_argument("estimate_resistance: isolated endpoint");

  PairEstimate est;
  est.eps = eps;
  est.min_degree = d;
  est.levels = detail::resolve_levels(g, eps, opts.levels, opts.kappa, opts.seed);
  est.r_max = eps / std::sqrt(static_cast<double>(d));
  uint32_t L = est.levels;
  est.walks_per_source =
      opts.walk_count
          ? *opts.walk_count
          : static_cast<uint64_t>(std::max(
                1.0, std::ceil(4.0 * L * L / (eps * eps) * est.r_max * d * std::log(n))));
  est.mom_groups = static_cast<uint32_t>(std::min<uint64_t>(
      opts.mom_groups ? *opts.mom_groups : detail::default_mom_groups(n), est.walks_per_source));

  PushProfile prof_s = push_profile(g, s, L, est.r_max);
  PushProfile prof_t = push_profile(g, t, L, est.r_max);
  est.pushes = prof_s.pushes + prof_t.pushes;
  ResidualScores scores_s(g, prof_s), scores_t(g, prof_t);
  if (L >= 1) {
    // every leftover residual is below threshold, so no single visit can
    // contribute more than (L+1)/L^2 * r_max
    assert(std::max(scores_s.max_score(), scores_t.max_score()) <=
           (L + 1.0) / (double(L) * L) * est.r_max * (1.0 + 1e-9));
  }
  detail::DualScorer sc = detail::dual_scorer(g, scores_s, scores_t);

  WalkRng root(opts.seed);
  auto [at_s_sys_s, at_s_sys_t] =
      detail::sampled_residual_mass(g, s, sc, est.walks_per_source, est.mom_groups, root, 0);
  auto [at_t_sys_s, at_t_sys_t] =
      detail::sampled_residual_mass(g, t, sc, est.walks_per_source, est.mom_groups, root, 1);

  est.p_ss = prof_s.q.get(s) + ds * at_s_sys_s;
  est.p_ts = prof_t.q.get(s) + ds * at_s_sys_t;
  est.p_st = prof_s.q.get(t) + dt * at_t_sys_s;
  est.p_tt = prof_t.q.get(t) + dt * at_t_sys_t;
  est.value = est.p_ss / ds - est.p_st / dt - est.p_ts / ds + est.p_tt / dt;
  return est;
}

// Sampling-only baseline: no push phase, walks from each endpoint count
// returns to the endpoints. Same output contract as estimate_resistance but
// needs on the order of 1/eps^2 walks instead of 1/eps.
template <GraphLike G>
PairEstimate baseline_estimate(const G& g, uint32_t s, uint32_t t, double eps,
                               const EstimateOptions& opts = {}) {
  detail::validate_pair_query(g, s, t, eps, "baseline_estimate");
  uint32_t n = g.vertex_count();
  double ds = g.degree(s), dt = g.degree(t);
  uint32_t d = static_cast<uint32_t>(std::min(ds, dt));
  if (d == 0) throw std::invalid_argument("baseline_estimate: isolated endpoint");

  PairEstimate est;
  est.eps = eps;
  est.min_degree = d;
  est.levels = detail::resolve_levels(g, eps, opts.levels, opts.kappa, opts.seed);
  uint32_t L = est.levels;
  est.walks_per_source =
      opts.walk_count ? *opts.walk_count
                      : static_cast<uint64_t>(std::max(
                            1.0, std::ceil(4.0 * L * L * std::log(n) / (eps * eps))));
  est.mom_groups = static_cast<uint32_t>(std::min<uint64_t>(
      opts.mom_groups ? *opts.mom_groups : detail::default_mom_groups(n), est.walks_per_source));

  // a visit to an endpoint contributes that endpoint's stationary share
  detail::DualScorer sc;
  sc.levels = L;
  sc.offset.assign(n, -1);
  size_t stride = 2 * (size_t(L) + 1);
  sc.offset[s] = 0;
  sc.offset[t] = static_cast<int64_t>(stride);
  sc.pool.assign(2 * stride, 0.0);
  for (uint32_t k = 0; k <= L; ++k) {
    sc.pool[sc.offset[s] + 2 * k] = 0.5 / ds;
    sc.pool[sc.offset[t] + 2 * k + 1] = 0.5 / dt;
  }

  WalkRng root(opts.seed);
  auto [at_s_sys_s, at_s_sys_t] =
      detail::sampled_residual_mass(g, s, sc, est.walks_per_source, est.mom_groups, root, 0);
  auto [at_t_sys_s, at_t_sys_t] =
      detail::sampled_residual_mass(g, t, sc, est.walks_per_source, est.mom_groups, root, 1);

  est.p_ss = ds * at_s_sys_s;
  est.p_ts = ds * at_s_sys_t;
  est.p_st = dt * at_t_sys_s;
  est.p_tt = dt * at_t_sys_t;
  est.value = est.p_ss / ds - est.p_st / dt - est.p_ts / ds + est.p_tt / dt;
  return est;
}

}  // namespace ertk
