#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

#include "ertk/dense_walk.hpp"
#include "ertk/graph.hpp"

namespace ertk {

class infinite_resistance_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// the two independent computation routes disagreed; indicates a bug or an
// ill-conditioned input, never expected in normal operation
class oracle_mismatch_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class dense_cap_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class structure_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Largest vertex count the dense routines accept. Overridable through the
// ER_TOOLKIT_DENSE_CAP environment variable (read once).
inline uint32_t dense_cap() {
  static const uint32_t cap = [] {
    if (const char* s = std::getenv("ER_TOOLKIT_DENSE_CAP")) {
      char* end = nullptr;
      unsigned long v = std::strtoul(s, &end, 10);
      if (end && *end == '\0' && v > 0 && v < 0x80000000ul) return static_cast<uint32_t>(v);
    }
    return 5000u;
  }();
  return cap;
}

inline Eigen::MatrixXd laplacian_matrix(const Graph& g) {
  uint32_t n = g.vertex_count();
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
  for (uint32_t u = 0; u < n; ++u) {
    L(u, u) = g.degree(u);
    for (uint32_t v : g.neighbors(u)) L(u, v) = -1.0;
  }
  return L;
}

namespace detail {

// above this size the pseudo-inverse route switches from a full
// eigendecomposition to the algebraically identical shifted solve
// (L + J/n)^{-1} - J/n, which costs one factorization instead
inline constexpr uint32_t kEigPinvMax = 600;

inline void check_dense(const Graph& g, const char* who) {
  if (g.vertex_count() > dense_cap())
    throw dense_cap_error(std::string(who) + ": graph exceeds the dense cap (" +
                          std::to_string(dense_cap()) +
                          " vertices; override with ER_TOOLKIT_DENSE_CAP)");
}

inline std::vector<uint32_t> component_of(const Graph& g, uint32_t s) {
  std::vector<uint8_t> seen(g.vertex_count(), 0);
  std::vector<uint32_t> stack{s}, comp;
  seen[s] = 1;
  while (!stack.empty()) {
    uint32_t u = stack.back();
    stack.pop_back();
    comp.push_back(u);
    for (uint32_t v : g.neighbors(u))
      if (!seen[v]) {
        seen[v] = 1;
        stack.push_back(v);
      }
  }
  std::sort(comp.begin(), comp.end());
  return comp;
}

}  // namespace detail

// Subgraph induced by `vertices`; position in the list becomes the new id.
// index_map (optional) receives old-id -> new-id (UINT32_MAX when dropped).
inline Graph induced_subgraph(const Graph& g, const std::vector<uint32_t>& vertices,
                              std::vector<uint32_t>* index_map = nullptr) {
  uint32_t n = g.vertex_count();
  std::vector<uint32_t> inv(n, UINT32_MAX);
  for (size_t i = 0; i < vertices.size(); ++i) {
    uint32_t v = vertices[i];
    if (v >= n) throw std::out_of_range("induced_subgraph: vertex out of range");
    if (inv[v] != UINT32_MAX) throw std::invalid_argument("induced_subgraph: duplicate vertex");
    inv[v] = static_cast<uint32_t>(i);
  }
  std::vector<std::pair<uint32_t, uint32_t>> edges;
  for (uint32_t u : vertices) {
    for (uint32_t w : g.neighbors(u)) {
      if (inv[w] == UINT32_MAX) continue;
      if (inv[w] > inv[u]) edges.emplace_back(inv[u], inv[w]);
    }
  }
  if (index_map) *index_map = std::move(inv);
  return Graph::from_edges(static_cast<uint32_t>(vertices.size()), edges);
}

// Moore-Penrose pseudo-inverse of the graph Laplacian. Eigendecomposition
// with a 1e-10 * lambda_max cutoff for modest sizes; one shifted solve above.
inline Eigen::MatrixXd laplacian_pseudo_inverse(const Graph& g) {
  detail::check_dense(g, "laplacian_pseudo_inverse");
  uint32_t n = g.vertex_count();
  Eigen::MatrixXd L = laplacian_matrix(g);
  if (n <= detail::kEigPinvMax) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(L);
    if (es.info() != Eigen::Success)
      throw std::runtime_error("laplacian_pseudo_inverse: eigensolver failed");
    const auto& w = es.eigenvalues();
    double cut = 1e-10 * w(n - 1);
    Eigen::VectorXd winv = Eigen::VectorXd::Zero(n);
    for (uint32_t i = 0; i < n; ++i)
      if (w(i) > cut) winv(i) = 1.0 / w(i);
    return es.eigenvectors() * winv.asDiagonal() * es.eigenvectors().transpose();
  }
  if (!g.connected())
    throw std::invalid_argument("laplacian_pseudo_inverse: graph must be connected above " +
                                std::to_string(detail::kEigPinvMax) + " vertices");
  double shift = 1.0 / n;
  L.array() += shift;
  Eigen::MatrixXd inv = L.ldlt().solve(Eigen::MatrixXd::Identity(n, n));
  inv.array() -= shift;
  return inv;
}

// (pseudo-inverse)_ss + _tt - 2 _st; convenience for callers holding the matrix
inline double resistance_from_pinv(const Eigen::MatrixXd& lp, uint32_t s, uint32_t t) {
  return lp(s, s) + lp(t, t) - 2.0 * lp(s, t);
}

// Resistance read off the grounded system: delete row/column `grounded` from
// the Laplacian and return the (probe, probe) entry of the inverse.
// Requires a connected graph.
inline double grounded_resistance(const Graph& g, uint32_t grounded, uint32_t probe) {
  uint32_t n = g.vertex_count();
  if (grounded >= n || probe >= n) throw std::out_of_range("grounded_resistance: vertex out of range");
  if (grounded == probe) throw std::invalid_argument("grounded_resistance: vertices must differ");
  if (!g.connected()) throw std::invalid_argument("grounded_resistance: graph must be connected");
  detail::check_dense(g, "grounded_resistance");

  auto idx = [&](uint32_t v) { return v < grounded ? v : v - 1; };
  Eigen::MatrixXd Ls = Eigen::MatrixXd::Zero(n - 1, n - 1);
  for (uint32_t u = 0; u < n; ++u) {
    if (u == grounded) continue;
    Ls(idx(u), idx(u)) = g.degree(u);
    for (uint32_t v : g.neighbors(u))
      if (v != grounded) Ls(idx(u), idx(v)) = -1.0;
  }
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n - 1);
  b(idx(probe)) = 1.0;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(Ls);
  if (ldlt.info() != Eigen::Success)
    throw std::runtime_error("grounded_resistance: factorization failed");
  return ldlt.solve(b)(idx(probe));
}

namespace detail {

inline double pinv_route_resistance(const Graph& g, uint32_t s, uint32_t t) {
  uint32_t n = g.vertex_count();
  Eigen::MatrixXd L = laplacian_matrix(g);
  if (n <= kEigPinvMax) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(L);
    if (es.info() != Eigen::Success)
      throw std::runtime_error("exact_resistance: eigensolver failed");
    const auto& w = es.eigenvalues();
    const auto& U = es.eigenvectors();
    double cut = 1e-10 * w(n - 1);
    double r = 0.0;
    for (uint32_t i = 0; i < n; ++i) {
      if (w(i) <= cut) continue;
      double c = U(s, i) - U(t, i);
      r += c * c / w(i);
    }
    return r;
  }
  double shift = 1.0 / n;
  L.array() += shift;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  b(s) = 1.0;
  b(t) = -1.0;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(L);
  if (ldlt.info() != Eigen::Success)
    throw std::runtime_error("exact_resistance: factorization failed");
  Eigen::VectorXd x = ldlt.solve(b);
  return x(s) - x(t);
}

}  // namespace detail

// Exact effective resistance between s and t, computed along two independent
// routes (pseudo-inverse quadratic form, grounded-system inverse) that must
// agree to 1e-8 relative. Returns the pseudo-inverse value. s == t gives 0.
// Endpoints in different components raise infinite_resistance_error; a
// disconnected graph is otherwise restricted to the endpoints' component.
inline double exact_resistance(const Graph& g, uint32_t s, uint32_t t) {
  uint32_t n = g.vertex_count();
  if (s >= n || t >= n) throw std::out_of_range("exact_resistance: vertex out of range");
  if (s == t) return 0.0;
  detail::check_dense(g, "exact_resistance");

  if (!g.connected()) {
    std::vector<uint32_t> comp = detail::component_of(g, s);
    std::vector<uint32_t> remap;
    if (!std::binary_search(comp.begin(), comp.end(), t))
      throw infinite_resistance_error("exact_resistance: endpoints are in different components");
    Graph sub = induced_subgraph(g, comp, &remap);
    return exact_resistance(sub, remap[s], remap[t]);
  }

  double r_pinv = detail::pinv_route_resistance(g, s, t);
  double r_grounded = grounded_resistance(g, s, t);
  double scale = std::max({std::abs(r_pinv), std::abs(r_grounded), 1e-300});
  if (std::abs(r_pinv - r_grounded) > 1e-8 * scale)
    throw oracle_mismatch_error("exact_resistance: routes disagree (" + std::to_string(r_pinv) +
                                " vs " + std::to_string(r_grounded) + ")");
  return r_pinv;
}

// Schur complement of the Laplacian onto `keep`: the Laplacian of the
// electrically equivalent weighted graph on the kept vertices.
inline Eigen::MatrixXd schur_complement(const Graph& g, const std::vector<uint32_t>& keep) {
  detail::check_dense(g, "schur_complement");
  uint32_t n = g.vertex_count();
  std::vector<uint8_t> kept(n, 0);
  for (uint32_t v : keep) {
    if (v >= n) throw std::out_of_range("schur_complement: vertex out of range");
    if (kept[v]) throw std::invalid_argument("schur_complement: duplicate vertex");
    kept[v] = 1;
  }
  std::vector<uint32_t> rest;
  for (uint32_t v = 0; v < n; ++v)
    if (!kept[v]) rest.push_back(v);

  Eigen::MatrixXd L = laplacian_matrix(g);
  auto pick = [&](const std::vector<uint32_t>& rows, const std::vector<uint32_t>& cols) {
    Eigen::MatrixXd M(rows.size(), cols.size());
    for (size_t i = 0; i < rows.size(); ++i)
      for (size_t j = 0; j < cols.size(); ++j) M(i, j) = L(rows[i], cols[j]);
    return M;
  };

  std::vector<uint32_t> keep_sorted(keep);
  Eigen::MatrixXd Lkk = pick(keep_sorted, keep_sorted);
  if (rest.empty()) return Lkk;

  Eigen::MatrixXd Lkr = pick(keep_sorted, rest);
  Eigen::MatrixXd Lrr = pick(rest, rest);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(Lrr);
  if (ldlt.info() != Eigen::Success)
    throw std::invalid_argument("schur_complement: eliminated block is singular");
  Eigen::VectorXd d = ldlt.vectorD();
  if (d.minCoeff() < 1e-12 * std::max(1.0, d.maxCoeff()))
    throw std::invalid_argument(
        "schur_complement: eliminated set contains an entire connected component");
  return Lkk - Lkr * ldlt.solve(Lkr.transpose());
}

struct ParallelResistances {
  double whole = 0.0;   // resistance in the full graph
  double via_a = 0.0;   // resistance through side A alone ({s,t} + side_a)
  double via_b = 0.0;   // resistance through side B alone
};

// For a graph that splits, apart from the terminals, into two sides with no
// edges between them and no direct s-t edge, the two sides behave like
// parallel resistors: 1/whole = 1/via_a + 1/via_b.
inline ParallelResistances parallel_resistances(const Graph& g, uint32_t s, uint32_t t,
                                                const std::vector<uint32_t>& side_a,
                                                const std::vector<uint32_t>& side_b) {
  uint32_t n = g.vertex_count();
  if (s >= n || t >= n) throw std::out_of_range("parallel_resistances: vertex out of range");
  if (s == t) throw structure_error("parallel_resistances: terminals must differ");
  if (g.has_edge(s, t)) throw structure_error("parallel_resistances: direct s-t edge");

  enum : uint8_t { kNone = 0, kA = 1, kB = 2, kTerm = 3 };
  std::vector<uint8_t> side(n, kNone);
  side[s] = side[t] = kTerm;
  auto mark = [&](const std::vector<uint32_t>& verts, uint8_t tag) {
    for (uint32_t v : verts) {
      if (v >= n) throw std::out_of_range("parallel_resistances: vertex out of range");
      if (side[v] != kNone) throw structure_error("parallel_resistances: sides must partition the non-terminal vertices");
      side[v] = tag;
    }
  };
  mark(side_a, kA);
  mark(side_b, kB);
  for (uint32_t v = 0; v < n; ++v)
    if (side[v] == kNone)
      throw structure_error("parallel_resistances: sides must cover every non-terminal vertex");
  for (uint32_t u : side_a)
    for (uint32_t w : g.neighbors(u))
      if (side[w] == kB)
        throw structure_error("parallel_resistances: edge between the two sides");

  auto side_resistance = [&](const std::vector<uint32_t>& verts) {
    std::vector<uint32_t> sub_verts{s, t};
    sub_verts.insert(sub_verts.end(), verts.begin(), verts.end());
    Graph sub = induced_subgraph(g, sub_verts);
    return exact_resistance(sub, 0, 1);
  };

  ParallelResistances out;
  out.whole = exact_resistance(g, s, t);
  out.via_a = side_resistance(side_a);
  out.via_b = side_resistance(side_b);
  return out;
}

}  // namespace ertk
