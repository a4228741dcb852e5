#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "ertk/graph.hpp"
#include "ertk/rng.hpp"

namespace ertk {

struct SpectralOptions {
  double tol = 1e-10;        // relative drift of the Rayleigh quotient between sweeps
  uint32_t max_iters = 200000;
  uint64_t seed = 1;
};

struct SpectralEstimate {
  double lambda2 = 0.0;      // second-smallest eigenvalue of the normalized Laplacian
  double lambda_max = 0.0;   // largest eigenvalue; <= 2 always
  double kappa = 0.0;        // lambda_max / lambda2
  uint32_t iters_lambda2 = 0;
  uint32_t iters_lambda_max = 0;
};

class spectral_convergence_error : public std::runtime_error {
 public:
  spectral_convergence_error(const std::string& msg, SpectralEstimate best)
      : std::runtime_error(msg), best(best) {}
  SpectralEstimate best;
};

namespace detail {

// y = (x + Ahat x)/2 where Ahat = D^{-1/2} A D^{-1/2}; spectrum of the result
// operator lies in [0, 1] so plain power iteration converges without sign flips
template <GraphLike G>
void half_lazy_apply(const G& g, const std::vector<double>& inv_sqrt_deg,
                     const std::vector<double>& x, std::vector<double>& y, double sign) {
  uint32_t n = g.vertex_count();
  y.assign(n, 0.0);
  for (uint32_t w = 0; w < n; ++w) {
    double xw = x[w] * inv_sqrt_deg[w];
    uint32_t d = g.degree(w);
    for (uint32_t i = 0; i < d; ++i) y[g.neighbor(w, i)] += xw;
  }
  for (uint32_t v = 0; v < n; ++v) y[v] = 0.5 * (x[v] + sign * y[v] * inv_sqrt_deg[v]);
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace detail

// Power-iteration estimates of the extreme normalized-Laplacian eigenvalues.
// lambda2 comes from iterating (I + Ahat)/2 deflated against its known top
// eigenvector sqrt(deg); lambda_max from iterating (I - Ahat)/2, whose top
// eigenvalue is lambda_max/2. Deterministic for a fixed seed. The tolerance
// is a stopping rule on Rayleigh-quotient drift, not a certified error bound.
template <GraphLike G>
SpectralEstimate estimate_spectral(const G& g, SpectralOptions opts = {}) {
  uint32_t n = g.vertex_count();
  if (n < 2) throw std::invalid_argument("estimate_spectral: need at least two vertices");
  if constexpr (requires { g.connected(); }) {
    if (!g.connected())
      throw std::invalid_argument("estimate_spectral: graph must be connected");
  }

  std::vector<double> inv_sqrt_deg(n);
  for (uint32_t v = 0; v < n; ++v) {
    uint32_t d = g.degree(v);
    if (d == 0) throw std::invalid_argument("estimate_spectral: isolated vertex");
    inv_sqrt_deg[v] = 1.0 / std::sqrt(static_cast<double>(d));
  }

  // top eigenvector of (I + Ahat)/2, known in closed form
  std::vector<double> v1(n);
  {
    double norm = 0.0;
    for (uint32_t v = 0; v < n; ++v) {
      v1[v] = 1.0 / inv_sqrt_deg[v];  // sqrt(deg)
      norm += v1[v] * v1[v];
    }
    norm = std::sqrt(norm);
    for (auto& c : v1) c /= norm;
  }

  WalkRng rng = WalkRng(opts.seed).derive(0x137bd5a1ULL);
  SpectralEstimate est;

  auto iterate = [&](double sign, bool deflate, uint32_t& iters_out, double& mu_out) {
    std::vector<double> x(n), y;
    for (auto& c : x) c = rng.next_unit() - 0.5;
    if (deflate) {
      double pr = detail::dot(x, v1);
      for (uint32_t v = 0; v < n; ++v) x[v] -= pr * v1[v];
    }
    double norm = std::sqrt(detail::dot(x, x));
    if (norm == 0.0) throw std::runtime_error("estimate_spectral: degenerate start vector");
    for (auto& c : x) c /= norm;

    double mu_prev = -1.0;
    uint32_t stable = 0;
    for (uint32_t it = 1; it <= opts.max_iters; ++it) {
      detail::half_lazy_apply(g, inv_sqrt_deg, x, y, sign);
      if (deflate) {
        double pr = detail::dot(y, v1);
        for (uint32_t v = 0; v < n; ++v) y[v] -= pr * v1[v];
      }
      double mu = detail::dot(x, y);  // x is unit
      mu_out = mu;
      double yn = std::sqrt(detail::dot(y, y));
      if (yn == 0.0) {
        // operator annihilated the whole deflated space: eigenvalue 0
        iters_out = it;
        mu_out = 0.0;
        return true;
      }
      for (uint32_t v = 0; v < n; ++v) x[v] = y[v] / yn;
      if (std::abs(mu - mu_prev) <= opts.tol * std::max(std::abs(mu), 1e-12)) {
        if (++stable >= 3) {
          iters_out = it;
          return true;
        }
      } else {
        stable = 0;
      }
      mu_prev = mu;
    }
    iters_out = opts.max_iters;
    return false;
  };

  double mu2 = 0.0, nu = 0.0;
  bool ok2 = iterate(+1.0, true, est.iters_lambda2, mu2);
  est.lambda2 = std::max(0.0, 2.0 * (1.0 - mu2));

  bool okm = iterate(-1.0, false, est.iters_lambda_max, nu);
  est.lambda_max = std::min(2.0, 2.0 * std::max(0.0, nu));

  if (est.lambda2 > 0.0) est.kappa = est.lambda_max / est.lambda2;

  if (!ok2 || !okm)
    throw spectral_convergence_error("estimate_spectral: power iteration did not converge", est);
  return est;
}

}  // namespace ertk
