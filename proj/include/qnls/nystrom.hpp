#ifndef QNLS_NYSTROM_HPP
#define QNLS_NYSTROM_HPP

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "qnls/contour.hpp"

namespace qnls {

using KernelFn = std::function<cplx(cplx, cplx)>;

// Fredholm determinant det(I + s K) by the Nystrom method on the supplied
// nodes: det(delta_jk + s * kern(x_j, x_k) * w_k).
inline cplx fredholm_det(const std::vector<cplx>& x, const std::vector<cplx>& w,
                         const KernelFn& kern, cplx s) {
  const int n = static_cast<int>(x.size());
  Eigen::MatrixXcd M(n, n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) M(j, k) = (j == k ? 1.0 : 0.0) + s * kern(x[j], x[k]) * w[k];
  return Eigen::PartialPivLU<Eigen::MatrixXcd>(M).determinant();
}

inline cplx fredholm_det(const Contour& c, const KernelFn& kern, cplx s) {
  return fredholm_det(c.x, c.w, kern, s);
}

// Solve (I + s K) f = rhs on the nodes.
inline std::vector<cplx> fredholm_solve(const std::vector<cplx>& x, const std::vector<cplx>& w,
                                        const KernelFn& kern, cplx s,
                                        const std::vector<cplx>& rhs) {
  const int n = static_cast<int>(x.size());
  Eigen::MatrixXcd M(n, n);
  Eigen::VectorXcd b(n);
  for (int j = 0; j < n; ++j) {
    b(j) = rhs[j];
    for (int k = 0; k < n; ++k) M(j, k) = (j == k ? 1.0 : 0.0) + s * kern(x[j], x[k]) * w[k];
  }
  Eigen::VectorXcd f = M.partialPivLu().solve(b);
  return std::vector<cplx>(f.data(), f.data() + n);
}

// Off-contour Cauchy sum  sum_k w_k vals_k / (x_k - z).  Refuses evaluation
// points closer to the contour than guard * local spacing, where the plain
// sum loses accuracy.
inline cplx cauchy_sum(const Contour& c, const std::vector<cplx>& vals, cplx z,
                       double guard = 3.0) {
  cplx s = 0;
  for (int k = 0; k < c.size(); ++k) {
    cplx d = c.x[k] - z;
    if (std::abs(d) < guard * c.spacing_at(k))
      fail(ErrKind::too_close_to_contour,
           fmt("cauchy eval at (%g,%g) within %g spacings of node", z.real(), z.imag(), guard));
    s += c.w[k] * vals[k] / d;
  }
  return s;
}

// Zero count of f inside the rectangle [x0,x1] x [y0,y1] by the argument
// principle.  Each edge is integrated adaptively; the winding number must
// land within 0.25 of an integer or the count is ambiguous.  A small |f| on
// the boundary is reported rather than silently mis-counted.
inline int count_zeros(const std::function<cplx(cplx)>& f, const std::function<cplx(cplx)>& fp,
                       double x0, double x1, double y0, double y1, double tol = 1e-9) {
  const GaussRule& g = gauss_rule(10);
  double fmin = 1e300;

  std::function<cplx(cplx, cplx, int)> edge = [&](cplx a, cplx b, int depth) -> cplx {
    auto quad = [&](cplx aa, cplx bb) {
      cplx mid = 0.5 * (aa + bb), half = 0.5 * (bb - aa);
      cplx s = 0;
      for (int j = 0; j < 10; ++j) {
        cplx z = mid + half * g.t[j];
        cplx fv = f(z);
        fmin = std::min(fmin, std::abs(fv));
        s += half * g.w[j] * fp(z) / fv;
      }
      return s;
    };
    cplx whole = quad(a, b);
    cplx mid = 0.5 * (a + b);
    cplx split = quad(a, mid) + quad(mid, b);
    if (std::abs(whole - split) < tol * (1.0 + std::abs(split))) return split;
    if (depth > 24)
      fail(ErrKind::ambiguous_count, "winding integral did not settle (zero near boundary?)");
    return edge(a, mid, depth + 1) + edge(mid, b, depth + 1);
  };

  cplx c00(x0, y0), c10(x1, y0), c11(x1, y1), c01(x0, y1);
  cplx W = edge(c00, c10, 0) + edge(c10, c11, 0) + edge(c11, c01, 0) + edge(c01, c00, 0);
  W /= 2.0 * pi * iu;
  if (fmin < 1e-9)
    fail(ErrKind::zero_on_boundary, fmt("|f| fell to %g on counting boundary", fmin));
  double n = std::round(W.real());
  if (std::abs(W - n) > 0.25)
    fail(ErrKind::ambiguous_count,
         fmt("winding %g%+gi not close to an integer", W.real(), W.imag()));
  return static_cast<int>(n);
}

}  // namespace qnls

#endif
