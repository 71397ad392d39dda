#ifndef QNLS_SOLVERS_HPP
#define QNLS_SOLVERS_HPP

#include <functional>
#include <vector>

#include "qnls/common.hpp"

namespace qnls {

struct SolverReport {
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;
  double damping = 1.0;
};

// Damped fixed-point iteration u <- (1-d) u + d F(u).  Damping starts at 1
// and halves whenever the sup-norm residual grows; it never recovers, which
// is crude but monotone.  Residual is ||F(u) - u||_inf (absolute).
inline SolverReport fixed_point(std::vector<cplx>& u,
                                const std::function<void(const std::vector<cplx>&, std::vector<cplx>&)>& F,
                                double tol, int max_iter) {
  SolverReport rep;
  std::vector<cplx> fu(u.size());
  double prev = 1e300;
  for (int it = 0; it < max_iter; ++it) {
    F(u, fu);
    double r = 0;
    for (size_t k = 0; k < u.size(); ++k) r = std::max(r, std::abs(fu[k] - u[k]));
    rep.iterations = it + 1;
    rep.residual = r;
    if (r < tol) {
      u = fu;
      rep.converged = true;
      return rep;
    }
    if (r > prev * 1.0000001 && rep.damping > 1.0 / 64.0) rep.damping *= 0.5;
    prev = r;
    for (size_t k = 0; k < u.size(); ++k)
      u[k] = (1.0 - rep.damping) * u[k] + rep.damping * fu[k];
  }
  return rep;
}

// Complex Newton with simple step limiting.  max_step bounds |dz| per
// iteration (0 disables).  Throws on vanishing derivative or non-convergence.
inline cplx newton_root(const std::function<cplx(cplx)>& f, const std::function<cplx(cplx)>& fp,
                        cplx seed, double tol, int max_iter, double max_step = 0.0,
                        SolverReport* out = nullptr) {
  cplx z = seed;
  SolverReport rep;
  for (int it = 0; it < max_iter; ++it) {
    cplx fv = f(z);
    rep.iterations = it + 1;
    rep.residual = std::abs(fv);
    if (rep.residual < tol) {
      rep.converged = true;
      if (out) *out = rep;
      return z;
    }
    cplx dv = fp(z);
    if (std::abs(dv) < 1e-300)
      fail(ErrKind::derivative_vanishes, fmt("newton derivative ~0 at (%g,%g)", z.real(), z.imag()));
    cplx dz = fv / dv;
    if (max_step > 0 && std::abs(dz) > max_step) dz *= max_step / std::abs(dz);
    z -= dz;
  }
  if (out) {
    *out = rep;
    return z;
  }
  fail(ErrKind::newton_failed,
       fmt("newton stalled at (%g,%g), residual %g", z.real(), z.imag(), rep.residual));
}

}  // namespace qnls

#endif
