#ifndef QNLS_MODEL_HPP
#define QNLS_MODEL_HPP

#include "qnls/common.hpp"

namespace qnls {

// Repulsive delta Bose gas at temperature T and chemical potential h.  The
// twist alpha enters only through the shifted potential h + 2 pi i alpha T.
// c_inf selects the exact free-fermion formulas instead of c-dependent
// kernels; every kernel below vanishes identically in that limit.
struct ModelParams {
  double c = 1.0;
  bool c_inf = false;
  double h = 0.0;
  double T = 1.0;
  cplx alpha = 0.0;

  cplx h_alpha() const { return cplx(h) + 2.0 * pi * iu * alpha * T; }

  void validate() const {
    require(T > 0, ErrKind::bad_input, "temperature must be positive");
    require(c_inf || c > 0, ErrKind::bad_input, "coupling must be positive");
    require(std::isfinite(h), ErrKind::bad_input, "h must be finite");
  }

  // Half-width of the strip |Im z| < 0.9 c where continuations are trusted.
  double strip() const { return c_inf ? 1e300 : 0.9 * c; }
};

// K(v) = 2c / (v^2 + c^2)
template <class V>
inline auto lieb_kernel(const ModelParams& m, V v) {
  if (m.c_inf) return V(0) * v;
  return 2.0 * m.c / (v * v + m.c * m.c);
}

// K'(v) = -4 c v / (v^2 + c^2)^2
template <class V>
inline auto lieb_kernel_d(const ModelParams& m, V v) {
  if (m.c_inf) return V(0) * v;
  V d = v * v + m.c * m.c;
  return -4.0 * m.c * v / (d * d);
}

// K''(v) = -4 c (c^2 - 3 v^2) / (v^2 + c^2)^3
template <class V>
inline auto lieb_kernel_dd(const ModelParams& m, V v) {
  if (m.c_inf) return V(0) * v;
  V d = v * v + m.c * m.c;
  return -4.0 * m.c * (m.c * m.c - 3.0 * v * v) / (d * d * d);
}

// theta(v) = i log((ic + v)/(ic - v)); odd, theta' = K, and analytic on
// |Im v| < c.  Principal logs are safe there because both arguments stay in
// the right half-plane after dividing out ic.
inline cplx theta_fn(const ModelParams& m, cplx v) {
  if (m.c_inf) return 0.0;
  require(std::abs(v.imag()) < m.c, ErrKind::outside_strip,
          fmt("theta at Im v = %g outside |Im| < c = %g", v.imag(), m.c));
  cplx ic = iu * m.c;
  return iu * (std::log(ic + v) - std::log(ic - v));
}

// K_alpha(v) = 1/(v + ic) - e^{2 pi i alpha}/(v - ic); reduces to -i K at
// alpha = 0.
inline cplx kernel_alpha(const ModelParams& m, cplx v) {
  if (m.c_inf) return 0.0;
  cplx ic = iu * m.c;
  return 1.0 / (v + ic) - std::exp(2.0 * pi * iu * m.alpha) / (v - ic);
}

}  // namespace qnls

#endif
