#ifndef QNLS_CONTOUR_HPP
#define QNLS_CONTOUR_HPP

#include <algorithm>
#include <functional>
#include <vector>

#include "qnls/quadrature.hpp"

namespace qnls {

// Oriented piecewise-straight contour with composite Gauss-Legendre nodes.
// Weights are directed: sum(w) telescopes to (end - start) vertex difference.
// A closed contour repeats no vertex; the last segment returns to vertices[0].
struct Contour {
  struct Panel {
    cplx a, b;  // straight sub-segment, traversed a -> b
    int i0;     // first node index
    int seg;    // index of the parent polyline segment
  };

  std::vector<cplx> vertices;
  std::vector<Panel> panels;
  std::vector<cplx> x;
  std::vector<cplx> w;
  int order = 0;
  bool closed = false;

  int size() const { return static_cast<int>(x.size()); }

  // Local resolution scale at node k, used for clearance checks.
  double spacing_at(int k) const {
    const Panel& p = panels[k / order];
    return std::abs(p.b - p.a) / order;
  }

  double min_distance(cplx z) const {
    double d = 1e300;
    for (const auto& p : panels) {
      // distance from z to segment [a,b]
      cplx ab = p.b - p.a;
      double L2 = std::norm(ab);
      double t = L2 > 0 ? std::clamp(((z - p.a) * std::conj(ab)).real() / L2, 0.0, 1.0) : 0.0;
      d = std::min(d, std::abs(z - (p.a + t * ab)));
    }
    return d;
  }
};

// panels per segment chosen so node spacing <= spacing[seg] (scalar overload
// below).  Degenerate (zero-length) segments are dropped.
inline Contour make_contour(const std::vector<cplx>& vertices, int order,
                            const std::vector<double>& spacing, bool closed = false) {
  require(vertices.size() >= 2 || (closed && vertices.size() >= 3), ErrKind::bad_input,
          "contour needs at least one segment");
  const GaussRule& g = gauss_rule(order);
  Contour c;
  c.vertices = vertices;
  c.order = order;
  c.closed = closed;
  size_t nseg = closed ? vertices.size() : vertices.size() - 1;
  require(spacing.size() == nseg, ErrKind::bad_input, "one spacing per segment");
  for (size_t s = 0; s < nseg; ++s) {
    cplx a = vertices[s], b = vertices[(s + 1) % vertices.size()];
    double len = std::abs(b - a);
    if (len < 1e-15) continue;
    require(spacing[s] > 0, ErrKind::bad_input, "spacing must be positive");
    int np = std::max(1, static_cast<int>(std::ceil(len / (spacing[s] * order))));
    for (int p = 0; p < np; ++p) {
      cplx pa = a + (b - a) * (double(p) / np);
      cplx pb = a + (b - a) * (double(p + 1) / np);
      Contour::Panel pan{pa, pb, static_cast<int>(c.x.size()), static_cast<int>(s)};
      cplx mid = 0.5 * (pa + pb), half = 0.5 * (pb - pa);
      for (int j = 0; j < order; ++j) {
        c.x.push_back(mid + half * g.t[j]);
        c.w.push_back(half * g.w[j]);
      }
      c.panels.push_back(pan);
    }
  }
  require(!c.panels.empty(), ErrKind::bad_input, "contour degenerate");
  return c;
}

inline Contour make_contour(const std::vector<cplx>& vertices, int order, double spacing,
                            bool closed = false) {
  size_t nseg = closed ? vertices.size() : vertices.size() - 1;
  return make_contour(vertices, order, std::vector<double>(nseg, spacing), closed);
}

inline Contour real_line_contour(const QuadGrid& g) {
  Contour c;
  c.order = g.order;
  c.closed = false;
  c.vertices = {cplx(-g.half_width), cplx(g.half_width)};
  double dp = g.panel_width();
  for (int p = 0; p < g.panels; ++p) {
    cplx a = cplx(-g.half_width + p * dp), b = a + dp;
    c.panels.push_back({a, b, p * g.order, 0});
  }
  c.x.assign(g.x.begin(), g.x.end());
  c.w.assign(g.w.begin(), g.w.end());
  return c;
}

// Counterclockwise rectangle [x0,x1] x [y0,y1] as a closed contour.
inline Contour rectangle_contour(double x0, double x1, double y0, double y1, int order,
                                 double spacing) {
  std::vector<cplx> v = {cplx(x0, y0), cplx(x1, y0), cplx(x1, y1), cplx(x0, y1)};
  return make_contour(v, order, spacing, true);
}

inline cplx contour_sum(const Contour& c, const std::vector<cplx>& vals) {
  require(vals.size() == c.x.size(), ErrKind::bad_input, "value/node mismatch");
  cplx s = 0;
  for (size_t k = 0; k < vals.size(); ++k) s += c.w[k] * vals[k];
  return s;
}

// Per-panel spectral derivative of nodal values along the contour.
inline std::vector<cplx> contour_derivative(const Contour& c, const std::vector<cplx>& vals) {
  const GaussRule& g = gauss_rule(c.order);
  int n = c.order;
  std::vector<cplx> out(vals.size());
  for (const auto& p : c.panels) {
    cplx scale = 2.0 / (p.b - p.a);
    for (int i = 0; i < n; ++i) {
      cplx acc = 0;
      for (int j = 0; j < n; ++j) acc += g.diff[i * n + j] * vals[p.i0 + j];
      out[p.i0 + i] = acc * scale;
    }
  }
  return out;
}

// Interpolate nodal values at z using the barycentric form on the panel whose
// segment is nearest to z.  Only trustworthy within ~ a panel width of the
// contour; callers needing true analytic continuation must supply evaluators.
inline cplx contour_interp(const Contour& c, const std::vector<cplx>& vals, cplx z) {
  const GaussRule& g = gauss_rule(c.order);
  int best = 0;
  double bd = 1e300;
  for (size_t p = 0; p < c.panels.size(); ++p) {
    const auto& pan = c.panels[p];
    cplx ab = pan.b - pan.a;
    double L2 = std::norm(ab);
    double t = L2 > 0 ? std::clamp(((z - pan.a) * std::conj(ab)).real() / L2, 0.0, 1.0) : 0.0;
    double d = std::abs(z - (pan.a + t * ab));
    if (d < bd) {
      bd = d;
      best = static_cast<int>(p);
    }
  }
  const auto& pan = c.panels[best];
  cplx num = 0, den = 0;
  for (int j = 0; j < c.order; ++j) {
    cplx d = z - c.x[pan.i0 + j];
    if (std::abs(d) < 1e-14) return vals[pan.i0 + j];
    cplx t = g.bary[j] / d;
    num += t * vals[pan.i0 + j];
    den += t;
  }
  return num / den;
}

// Continuous branch of log f along the contour, sampled at the nodes.  The
// walk starts at the first vertex, visits every node in order, and passes
// through panel junctions so corners are honoured.  Between consecutive walk
// points the phase step must stay below pi/2; otherwise the step is bisected.
// Depth exhaustion means f wound too fast to track (a zero or pole sits on or
// next to the path).
struct UnwrapResult {
  std::vector<cplx> log_vals;  // at contour nodes
  cplx start_log;              // continuous log at first vertex
  cplx end_log;                // continuous log at final vertex
  int max_depth = 0;
};

inline UnwrapResult unwrapped_log(const Contour& c, const std::function<cplx(cplx)>& f) {
  UnwrapResult R;
  R.log_vals.resize(c.x.size());

  cplx p = c.vertices[0];
  cplx fp = f(p);
  require(std::abs(fp) > 0, ErrKind::branch_jump, "log of zero at contour start");
  cplx logp = std::log(fp);
  R.start_log = logp;

  // advance continuous log from (p, fp, logp) to q along a straight chord
  std::function<void(cplx, int)> step = [&](cplx q, int depth) {
    if (depth > 48) fail(ErrKind::branch_jump, "phase unwrap did not settle: zero/pole on path");
    R.max_depth = std::max(R.max_depth, depth);
    cplx fq = f(q);
    if (std::abs(fq) == 0.0) fail(ErrKind::branch_jump, "log of zero on contour");
    double darg = std::arg(fq / fp);
    if (std::abs(darg) > 0.5 * pi) {
      cplx mid = 0.5 * (p + q);
      step(mid, depth + 1);
      step(q, depth + 1);
      return;
    }
    logp = cplx(std::log(std::abs(fq)), logp.imag() + darg);
    p = q;
    fp = fq;
  };

  for (size_t pan = 0; pan < c.panels.size(); ++pan) {
    step(c.panels[pan].a, 0);
    for (int j = 0; j < c.order; ++j) {
      step(c.x[c.panels[pan].i0 + j], 0);
      R.log_vals[c.panels[pan].i0 + j] = logp;
    }
    step(c.panels[pan].b, 0);
  }
  R.end_log = logp;
  return R;
}

// Principal-value of  \int_C dmu/(mu - x_j)  for a node x_j on C: per-panel
// principal logs, with the panel containing the node contributing the real
// log of the endpoint-distance ratio.  Other panels subtend less than pi from
// x_j, so principal branches glue correctly.
inline cplx pv_log_kernel(const Contour& c, int j) {
  int pj = j / c.order;
  cplx xj = c.x[j];
  cplx acc = 0;
  for (size_t p = 0; p < c.panels.size(); ++p) {
    const auto& pan = c.panels[p];
    if (static_cast<int>(p) == pj) {
      acc += std::log(std::abs(pan.b - xj) / std::abs(xj - pan.a));
    } else {
      acc += std::log((pan.b - xj) / (pan.a - xj));
    }
  }
  return acc;
}

}  // namespace qnls

#endif
