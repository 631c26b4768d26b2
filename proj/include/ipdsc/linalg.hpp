#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace ipdsc {

struct EigenRange {
  double min = 0.0;
  double max = 0.0;
};

namespace detail {

// Diagonal and sub-diagonal of a symmetric tridiagonal matrix.
struct Tridiagonal {
  std::vector<double> diag;
  std::vector<double> off;  // off[k] couples rows k and k+1
};

// Householder reduction of a dense symmetric matrix (row-major, n x n) to
// tridiagonal form. The input is consumed.
inline Tridiagonal tridiagonalize(std::vector<double> a, std::size_t n) {
  auto at = [&](std::size_t i, std::size_t j) -> double& { return a[i * n + j]; };
  Tridiagonal t{std::vector<double>(n, 0.0), std::vector<double>(n > 0 ? n - 1 : 0, 0.0)};
  std::vector<double> v(n), p(n);

  for (std::size_t k = 0; k + 2 < n; ++k) {
    const std::size_t m = n - k - 1;  // trailing block size
    double norm = 0.0;
    for (std::size_t r = 0; r < m; ++r) norm = std::hypot(norm, at(k + 1 + r, k));
    t.diag[k] = at(k, k);
    if (norm == 0.0) {
      t.off[k] = 0.0;
      continue;
    }
    const double x0 = at(k + 1, k);
    const double alpha = x0 > 0.0 ? -norm : norm;
    for (std::size_t r = 0; r < m; ++r) v[r] = at(k + 1 + r, k);
    v[0] -= alpha;
    double vnorm = 0.0;
    for (std::size_t r = 0; r < m; ++r) vnorm = std::hypot(vnorm, v[r]);
    t.off[k] = alpha;
    if (vnorm == 0.0) continue;
    for (std::size_t r = 0; r < m; ++r) v[r] /= vnorm;

    // S <- S - 2 v w^T - 2 w v^T with p = S v, w = p - (v.p) v
    double kappa = 0.0;
    for (std::size_t r = 0; r < m; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < m; ++c) s += at(k + 1 + r, k + 1 + c) * v[c];
      p[r] = s;
      kappa += v[r] * s;
    }
    for (std::size_t r = 0; r < m; ++r) p[r] -= kappa * v[r];
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t c = 0; c < m; ++c)
        at(k + 1 + r, k + 1 + c) -= 2.0 * (v[r] * p[c] + p[r] * v[c]);
  }
  if (n >= 2) {
    t.diag[n - 2] = at(n - 2, n - 2);
    t.off[n - 2] = at(n - 1, n - 2);
  }
  if (n >= 1) t.diag[n - 1] = at(n - 1, n - 1);
  return t;
}

// Number of eigenvalues of the tridiagonal matrix strictly below x.
inline std::size_t sturm_count(const Tridiagonal& t, double x) {
  const double tiny = std::numeric_limits<double>::min();
  std::size_t count = 0;
  double q = 1.0;
  for (std::size_t i = 0; i < t.diag.size(); ++i) {
    const double e2 = i == 0 ? 0.0 : t.off[i - 1] * t.off[i - 1];
    q = t.diag[i] - x - (i == 0 ? 0.0 : e2 / q);
    if (q == 0.0) q = -tiny;
    if (q < 0.0) ++count;
  }
  return count;
}

// k-th smallest eigenvalue (0-based) by bisection inside [lo, hi].
inline double bisect_eigenvalue(const Tridiagonal& t, std::size_t k, double lo, double hi,
                                double rel_tol) {
  const double scale = std::max({std::abs(lo), std::abs(hi), 1e-300});
  for (int iter = 0; iter < 2000 && hi - lo > rel_tol * scale; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (sturm_count(t, mid) > k)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

// Smallest and largest eigenvalue of a dense symmetric matrix stored
// row-major. Reduces to tridiagonal form, then bisects on Sturm counts
// inside the Gershgorin interval.
inline EigenRange extreme_eigenvalues(std::span<const double> matrix, std::size_t n,
                                      double rel_tol = 1e-12) {
  if (n == 0) throw std::invalid_argument("empty matrix has no eigenvalues");
  if (matrix.size() != n * n) throw std::invalid_argument("matrix size mismatch");
  if (n == 1) return {matrix[0], matrix[0]};

  const auto t = detail::tridiagonalize(std::vector<double>(matrix.begin(), matrix.end()), n);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < n; ++i) {
    const double radius = (i > 0 ? std::abs(t.off[i - 1]) : 0.0) +
                          (i + 1 < n ? std::abs(t.off[i]) : 0.0);
    lo = std::min(lo, t.diag[i] - radius);
    hi = std::max(hi, t.diag[i] + radius);
  }
  const double pad = 1e-12 * std::max({std::abs(lo), std::abs(hi), 1.0});
  lo -= pad;
  hi += pad;
  return {detail::bisect_eigenvalue(t, 0, lo, hi, rel_tol),
          detail::bisect_eigenvalue(t, n - 1, lo, hi, rel_tol)};
}

}  // namespace ipdsc
