#pragma once

#include <array>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "ertk/estimator.hpp"
#include "ertk/flat_map.hpp"
#include "ertk/graph.hpp"
#include "ertk/push.hpp"
#include "ertk/rng.hpp"

namespace ertk {

class index_format_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class index_version_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class index_checksum_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class index_truncated_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// CRC-64/XZ (reflected 0x42F0E1EBA9EA3693); check value of "123456789" is
// 0x995DC9BBDF1939FA
inline uint64_t crc64_xz(const uint8_t* data, size_t len) {
  static const std::array<uint64_t, 256> table = [] {
    std::array<uint64_t, 256> t{};
    for (uint32_t i = 0; i < 256; ++i) {
      uint64_t c = i;
      for (int b = 0; b < 8; ++b) c = (c & 1) ? (c >> 1) ^ 0xC96C5795D7870F42ull : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  uint64_t crc = ~0ull;
  for (size_t i = 0; i < len; ++i) crc = table[(crc ^ data[i]) & 0xff] ^ (crc >> 8);
  return ~crc;
}

// All-pairs resistance sketch. rows[u] holds, for each retained hub v, an
// estimate of u's occupancy profile read at v; query() recombines three such
// entries. Entries exist for hubs v with (deg(v), v) <= (deg(u), u) in
// lexicographic order, and every row contains its own vertex.
struct ResistanceIndex {
  uint32_t vertex_count = 0;
  uint64_t edge_count = 0;
  uint32_t levels = 0;
  double eps = 0.0;
  double r_max = 0.0;  // base residual threshold; per-hub thresholds divide by occupancy
  uint64_t seed = 0;
  std::vector<uint64_t> degrees;
  std::vector<flat_map<uint32_t, double>> rows;

  uint64_t entry_count() const {
    uint64_t total = 0;
    for (const auto& row : rows) total += row.size();
    return total;
  }

  // Symmetric by construction: both argument orders canonicalize to the same
  // three stored entries. Unknown pairs fall back to the stored diagonal
  // terms alone. s == t returns 0.
  double query(uint32_t s, uint32_t t) const {
    if (s >= vertex_count || t >= vertex_count)
      throw std::out_of_range("ResistanceIndex::query: vertex out of range");
    if (s == t) return 0.0;
    uint32_t lo = s, hi = t;
    if (degrees[lo] > degrees[hi] || (degrees[lo] == degrees[hi] && lo > hi)) std::swap(lo, hi);
    double a = rows[lo].get(lo);
    double b = rows[hi].get(lo);
    double c = rows[hi].get(hi);
    return a / degrees[lo] - 2.0 * b / degrees[lo] + c / degrees[hi];
  }
};

struct IndexOptions {
  uint64_t seed = 1;
  std::optional<uint32_t> levels;      // walk length; same default rule as EstimateOptions
  std::optional<double> kappa;
  std::optional<uint32_t> mom_groups;  // median-of-means groups; default ceil(log2 n)
  uint32_t workers = 1;                // row-level parallelism; output is worker-count invariant
};

// Visit counts from a batch of lazy walks, bucketed into contiguous
// median-of-means groups. One collection is scored against many residual
// systems, which is what makes the index build cheap per retained hub.
struct WalkVisitCounts {
  uint32_t levels = 0;
  uint64_t walks = 0;
  uint32_t groups = 0;
  // per group: (step << 32 | vertex) -> visit count
  std::vector<flat_map<uint64_t, uint64_t>> counts;
};

template <GraphLike G>
WalkVisitCounts collect_visit_counts(const G& g, uint32_t start, uint32_t levels, uint64_t walks,
                                     uint32_t groups, const WalkRng& root, uint64_t tag) {
  WalkVisitCounts out;
  out.levels = levels;
  out.walks = walks;
  out.groups = groups;
  out.counts.resize(groups);
  for (uint64_t j = 0; j < walks; ++j) {
    WalkRng wr = root.derive(tag, j);
    auto& bucket = out.counts[static_cast<size_t>(j * groups / walks)];
    walk_visits(g, start, levels, wr, [&](uint32_t k, uint32_t w) {
      ++bucket[(static_cast<uint64_t>(k) << 32) | w];
    });
  }
  return out;
}

// Plain visit totals (all steps pooled); totals[w] / (2 walks) estimates
// the occupancy profile of `start` at w.
template <GraphLike G>
flat_map<uint32_t, uint64_t> sampled_profile(const G& g, uint32_t start, uint32_t levels,
                                             uint64_t walks, const WalkRng& root, uint64_t tag) {
  flat_map<uint32_t, uint64_t> totals;
  for (uint64_t j = 0; j < walks; ++j) {
    WalkRng wr = root.derive(tag, j);
    walk_visits(g, start, levels, wr, [&](uint32_t, uint32_t w) { ++totals[w]; });
  }
  return totals;
}

// Sum over steps k of the median over groups of the group-mean visit score:
// the same median-of-means reduction the pair estimator applies, evaluated
// from pre-collected counts.
inline double scored_residual_mass(const WalkVisitCounts& counts, const ResidualScores& scores) {
  uint32_t L = counts.levels;
  uint32_t K = counts.groups;
  std::vector<double> sums((size_t(L) + 1) * K, 0.0);
  for (uint32_t gi = 0; gi < K; ++gi)
    counts.counts[gi].for_each([&](uint64_t key, uint64_t cnt) {
      uint32_t k = static_cast<uint32_t>(key >> 32);
      uint32_t w = static_cast<uint32_t>(key);
      double sc = scores.score(w, k);
      if (sc != 0.0) sums[size_t(k) * K + gi] += cnt * sc;
    });
  double total = 0.0;
  std::vector<double> means(K);
  for (uint32_t k = 0; k <= L; ++k) {
    for (uint32_t gi = 0; gi < K; ++gi)
      means[gi] = sums[size_t(k) * K + gi] / detail::group_size(counts.walks, K, gi);
    total += detail::median_in_place(means);
  }
  return total;
}

// Builds the all-pairs sketch. Per row u: one walk batch estimates u's
// profile and selects hubs, a second batch is counted once, and each
// retained hub's residual system (pushed to a depth inversely proportional
// to the hub's estimated occupancy) is scored against those counts. Every
// walk draws from a stream derived from (seed, u, stage, walk), so the
// result is independent of worker count and scheduling.
template <GraphLike G>
ResistanceIndex build_index(const G& g, double eps, const IndexOptions& opts = {}) {
  uint32_t n = g.vertex_count();
  if (n < 2) throw std::invalid_argument("build_index: need at least two vertices");
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("build_index: eps must be in (0, 1)");
  if constexpr (requires { g.connected(); }) {
    if (!g.connected()) throw std::invalid_argument("build_index: graph must be connected");
  }

  ResistanceIndex idx;
  idx.vertex_count = n;
  idx.edge_count = g.edge_count();
  idx.eps = eps;
  idx.seed = opts.seed;
  idx.levels = detail::resolve_levels(g, eps, opts.levels, opts.kappa, opts.seed);
  uint32_t L = idx.levels;
  double m = static_cast<double>(idx.edge_count);
  idx.r_max = L * eps * std::sqrt(n / m);
  idx.degrees.resize(n);
  for (uint32_t u = 0; u < n; ++u) idx.degrees[u] = g.degree(u);
  idx.rows.resize(n);

  uint64_t n_r1 = static_cast<uint64_t>(std::max(1.0, std::ceil(L * double(L) * std::log(n) / eps)));
  uint32_t groups_wanted =
      opts.mom_groups ? *opts.mom_groups : detail::default_mom_groups(n);
  WalkRng root(opts.seed);

  auto build_row = [&](uint32_t u) {
    WalkRng row_rng = root.derive(u);
    double du = g.degree(u);

    flat_map<uint32_t, uint64_t> totals = sampled_profile(g, u, L, n_r1, row_rng, 1);
    std::vector<std::pair<uint32_t, double>> hubs;  // (v, estimated occupancy)
    for (auto& [v, cnt] : totals.sorted_items()) {
      double occupancy = cnt / (2.0 * n_r1);
      if (!(occupancy > eps / 2.0)) continue;
      uint64_t dv = g.degree(v);
      if (dv > idx.degrees[u] || (dv == idx.degrees[u] && v > u)) continue;
      hubs.emplace_back(v, occupancy);
    }

    uint64_t n_r3 = static_cast<uint64_t>(
        std::max(1.0, std::ceil(L / (eps * eps) * idx.r_max * du * std::log(n))));
    uint32_t groups = static_cast<uint32_t>(std::min<uint64_t>(groups_wanted, n_r3));
    WalkVisitCounts counts = collect_visit_counts(g, u, L, n_r3, groups, row_rng, 2);

    flat_map<uint32_t, double> row;
    row.reserve(hubs.size());
    for (auto& [v, occupancy] : hubs) {
      double hub_r_max = idx.r_max / (2.0 * std::max(occupancy, eps / 2.0));
      PushProfile prof = push_profile(g, v, L, hub_r_max);
      ResidualScores scores(g, prof);
      double dv = g.degree(v);
      row[v] = prof.q.get(u) * dv / du + dv * scored_residual_mass(counts, scores);
    }
    return row;
  };

  uint32_t workers = std::max(1u, opts.workers);
  if (workers == 1) {
    for (uint32_t u = 0; u < n; ++u) idx.rows[u] = build_row(u);
    return idx;
  }
  std::atomic<uint32_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (uint32_t wi = 0; wi < workers; ++wi)
    pool.emplace_back([&, wi] {
      try {
        for (;;) {
          uint32_t u = next.fetch_add(1, std::memory_order_relaxed);
          if (u >= n) return;
          idx.rows[u] = build_row(u);
        }
      } catch (...) {
        errors[wi] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (auto& err : errors)
    if (err) std::rethrow_exception(err);
  return idx;
}

namespace detail {

struct byte_writer {
  std::vector<uint8_t> buf;
  void u32(uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<uint8_t>(v >> (8 * i)));
  }
  void u64(uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<uint64_t>(v)); }
};

struct byte_reader {
  const uint8_t* p;
  size_t len;
  size_t pos = 0;
  void need(size_t k) {
    if (pos + k > len) throw index_truncated_error("index file ends mid-record");
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(p[pos + i]) << (8 * i);
    pos += 4;
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(p[pos + i]) << (8 * i);
    pos += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
};

}  // namespace detail

inline constexpr char kIndexMagic[4] = {'E', 'R', 'S', 'K'};
inline constexpr uint32_t kIndexVersion = 1;

// Layout, all little-endian: magic "ERSK", format version u32, then n, m, L
// as u64, eps and the base residual threshold as raw binary64 bits, the
// build seed, n degrees, and per vertex a count followed by sorted
// (vertex u64, value bits u64) entries. A CRC-64/XZ of everything preceding
// it closes the file.
inline void save_index(const ResistanceIndex& idx, const std::string& path) {
  detail::byte_writer w;
  w.buf.insert(w.buf.end(), kIndexMagic, kIndexMagic + 4);
  w.u32(kIndexVersion);
  w.u64(idx.vertex_count);
  w.u64(idx.edge_count);
  w.u64(idx.levels);
  w.f64(idx.eps);
  w.f64(idx.r_max);
  w.u64(idx.seed);
  for (uint64_t d : idx.degrees) w.u64(d);
  for (const auto& row : idx.rows) {
    w.u64(row.size());
    for (auto& [v, val] : row.sorted_items()) {
      w.u64(v);
      w.f64(val);
    }
  }
  uint64_t crc = crc64_xz(w.buf.data(), w.buf.size());
  w.u64(crc);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("save_index: cannot open " + path);
  out.write(reinterpret_cast<const char*>(w.buf.data()), static_cast<std::streamsize>(w.buf.size()));
  if (!out) throw std::runtime_error("save_index: write failed for " + path);
}

inline ResistanceIndex load_index(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_index: cannot open " + path);
  std::vector<uint8_t> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < 4) throw index_truncated_error("index file shorter than its magic");
  if (std::memcmp(buf.data(), kIndexMagic, 4) != 0)
    throw index_format_error("not an index file (bad magic)");
  if (buf.size() < 4 + 4 + 8) throw index_truncated_error("index file shorter than its framing");

  // structural overruns report truncation; an intact structure whose bytes
  // were altered reports a checksum mismatch instead
  detail::byte_reader r{buf.data(), buf.size() - 8};
  r.pos = 4;
  uint32_t version = r.u32();
  if (version != kIndexVersion)
    throw index_version_error("unsupported index version " + std::to_string(version));

  ResistanceIndex idx;
  uint64_t n = r.u64();
  if (n > 0xFFFFFFFFull) throw index_format_error("vertex count does not fit 32 bits");
  idx.vertex_count = static_cast<uint32_t>(n);
  idx.edge_count = r.u64();
  uint64_t levels = r.u64();
  if (levels > 0xFFFFFFFFull) throw index_format_error("walk length does not fit 32 bits");
  idx.levels = static_cast<uint32_t>(levels);
  idx.eps = r.f64();
  idx.r_max = r.f64();
  idx.seed = r.u64();
  idx.degrees.resize(idx.vertex_count);
  for (auto& d : idx.degrees) d = r.u64();
  idx.rows.resize(idx.vertex_count);
  for (auto& row : idx.rows) {
    uint64_t count = r.u64();
    if (count > (r.len - r.pos) / 16) throw index_truncated_error("row count exceeds file size");
    row.reserve(count);
    for (uint64_t i = 0; i < count; ++i) {
      uint64_t v = r.u64();
      if (v >= idx.vertex_count) throw index_format_error("row entry references unknown vertex");
      row[static_cast<uint32_t>(v)] = r.f64();
    }
  }
  uint64_t stored_crc = 0;
  for (int i = 0; i < 8; ++i) stored_crc |= static_cast<uint64_t>(buf[buf.size() - 8 + i]) << (8 * i);
  if (crc64_xz(buf.data(), buf.size() - 8) != stored_crc)
    throw index_checksum_error("index checksum mismatch");
  if (r.pos != r.len) throw index_format_error("trailing bytes after the last row");
  return idx;
}

}  // namespace ertk
