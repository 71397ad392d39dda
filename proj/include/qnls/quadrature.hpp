#ifndef QNLS_QUADRATURE_HPP
#define QNLS_QUADRATURE_HPP

#include <map>
#include <vector>

#include "qnls/common.hpp"

namespace qnls {

// Reference Gauss-Legendre rule on [-1,1] plus the barycentric weights and the
// differentiation matrix for the same node set.  Cached per order; orders stay
// small (<= 32) so the O(n^2) setup cost is irrelevant.
struct GaussRule {
  int order = 0;
  std::vector<double> t;     // nodes, ascending
  std::vector<double> w;     // quadrature weights
  std::vector<double> bary;  // barycentric weights
  std::vector<double> diff;  // row-major order x order differentiation matrix
};

inline const GaussRule& gauss_rule(int n) {
  static std::map<int, GaussRule> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  require(n >= 2 && n <= 64, ErrKind::bad_input, "gauss order out of range");

  GaussRule r;
  r.order = n;
  r.t.resize(n);
  r.w.resize(n);
  for (int k = 0; k < (n + 1) / 2; ++k) {
    double x = std::cos(pi * (k + 0.75) / (n + 0.5));
    double p0 = 0, p1 = 0;
    for (int it2 = 0; it2 < 100; ++it2) {
      p0 = 1.0;
      p1 = x;
      for (int j = 2; j <= n; ++j) {
        double p2 = ((2 * j - 1) * x * p1 - (j - 1) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      double dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double dp = n * (x * p1 - p0) / (x * x - 1.0);
    r.t[k] = -x;
    r.t[n - 1 - k] = x;
    double wk = 2.0 / ((1.0 - x * x) * dp * dp);
    r.w[k] = wk;
    r.w[n - 1 - k] = wk;
  }

  // Barycentric weights from node differences; overall scale is irrelevant.
  r.bary.assign(n, 1.0);
  for (int i = 0; i < n; ++i) {
    double p = 1.0;
    for (int j = 0; j < n; ++j)
      if (j != i) p *= (r.t[i] - r.t[j]);
    r.bary[i] = 1.0 / p;
  }

  r.diff.assign(n * n, 0.0);
  for (int i = 0; i < n; ++i) {
    double rowsum = 0.0;
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      double d = (r.bary[j] / r.bary[i]) / (r.t[i] - r.t[j]);
      r.diff[i * n + j] = d;
      rowsum += d;
    }
    r.diff[i * n + i] = -rowsum;
  }

  auto [ins, ok] = cache.emplace(n, std::move(r));
  return ins->second;
}

// Composite Gauss-Legendre grid on [-L, L] with uniform panels.
struct QuadGrid {
  double half_width = 0;
  int panels = 0;
  int order = 0;
  std::vector<double> x;
  std::vector<double> w;

  int size() const { return static_cast<int>(x.size()); }
  double panel_width() const { return 2.0 * half_width / panels; }
};

inline QuadGrid make_grid(double half_width, int panels, int order) {
  require(half_width > 0 && panels >= 1, ErrKind::bad_input, "bad grid extents");
  const GaussRule& g = gauss_rule(order);
  QuadGrid q;
  q.half_width = half_width;
  q.panels = panels;
  q.order = order;
  const double hw = half_width, dp = 2.0 * hw / panels;
  q.x.reserve(panels * order);
  q.w.reserve(panels * order);
  for (int p = 0; p < panels; ++p) {
    double a = -hw + p * dp, b = a + dp;
    double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (int j = 0; j < order; ++j) {
      q.x.push_back(mid + half * g.t[j]);
      q.w.push_back(half * g.w[j]);
    }
  }
  return q;
}

// Evaluate the polynomial interpolant through (nodes, vals) at z via the
// barycentric formula; nodes are one panel's quadrature points.  Exact node
// hits short-circuit.
template <class Node>
inline cplx bary_eval(const std::vector<double>& bary, const std::vector<Node>& nodes, int i0,
                      int n, const std::vector<cplx>& vals, cplx z) {
  cplx num = 0, den = 0;
  for (int j = 0; j < n; ++j) {
    cplx d = z - cplx(nodes[i0 + j]);
    if (std::abs(d) < 1e-14) return vals[i0 + j];
    cplx t = bary[j] / d;
    num += t * vals[i0 + j];
    den += t;
  }
  return num / den;
}

}  // namespace qnls

#endif
