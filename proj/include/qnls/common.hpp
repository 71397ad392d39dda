#ifndef QNLS_COMMON_HPP
#define QNLS_COMMON_HPP

#include <cmath>
#include <complex>
#include <cstdarg>
#include <cstdio>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace qnls {

using cplx = std::complex<double>;

inline constexpr double pi = std::numbers::pi;
inline constexpr cplx iu{0.0, 1.0};

// Error taxonomy. Every failure mode the solvers can hit maps to one kind so
// tests can assert on the cause rather than parse message strings.
enum class ErrKind {
  bad_input,
  no_convergence,
  derivative_vanishes,
  zero_on_boundary,
  ambiguous_count,
  too_close_to_contour,
  outside_strip,
  at_pole,
  at_branch_point,
  seed_outside_strip,
  newton_failed,
  root_collision,
  root_left_strip,
  cannot_separate,
  branch_jump,
  small_denominator,
  grid_too_coarse,
  fit_ill_conditioned,
  extrapolation_disagrees,
  truncation_not_settled,
  io_error,
};

inline const char* to_string(ErrKind k) {
  switch (k) {
    case ErrKind::bad_input: return "bad_input";
    case ErrKind::no_convergence: return "no_convergence";
    case ErrKind::derivative_vanishes: return "derivative_vanishes";
    case ErrKind::zero_on_boundary: return "zero_on_boundary";
    case ErrKind::ambiguous_count: return "ambiguous_count";
    case ErrKind::too_close_to_contour: return "too_close_to_contour";
    case ErrKind::outside_strip: return "outside_strip";
    case ErrKind::at_pole: return "at_pole";
    case ErrKind::at_branch_point: return "at_branch_point";
    case ErrKind::seed_outside_strip: return "seed_outside_strip";
    case ErrKind::newton_failed: return "newton_failed";
    case ErrKind::root_collision: return "root_collision";
    case ErrKind::root_left_strip: return "root_left_strip";
    case ErrKind::cannot_separate: return "cannot_separate";
    case ErrKind::branch_jump: return "branch_jump";
    case ErrKind::small_denominator: return "small_denominator";
    case ErrKind::grid_too_coarse: return "grid_too_coarse";
    case ErrKind::fit_ill_conditioned: return "fit_ill_conditioned";
    case ErrKind::extrapolation_disagrees: return "extrapolation_disagrees";
    case ErrKind::truncation_not_settled: return "truncation_not_settled";
    case ErrKind::io_error: return "io_error";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrKind kind, const std::string& msg)
      : std::runtime_error(std::string(to_string(kind)) + ": " + msg), kind_(kind) {}
  ErrKind kind() const { return kind_; }

 private:
  ErrKind kind_;
};

[[noreturn]] inline void fail(ErrKind k, const std::string& msg) { throw Error(k, msg); }

inline void require(bool ok, ErrKind k, const std::string& msg) {
  if (!ok) fail(k, msg);
}

// log(1 + e^x) without overflow: for Re x > 0 rewrite as x + log(1 + e^{-x}).
inline cplx log1pexp(cplx x) {
  if (x.real() > 0.0) return x + std::log(1.0 + std::exp(-x));
  return std::log(1.0 + std::exp(x));
}

// Fermi weight 1/(1 + e^x), overflow-safe on both ends.
inline cplx fermi_of(cplx x) {
  if (x.real() > 0.0) {
    cplx e = std::exp(-x);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(x));
}

// log(γ e^{-u/T} + (1-γ) e^{-e/T} + 1), safe when the exponents are large
// positive (deep Fermi sea).  u and e never differ wildly in real part there,
// so factoring out e^{-u/T} keeps everything bounded.
inline cplx log_blend(cplx u, cplx e, double gamma, double T) {
  cplx a = -u / T, b = -e / T;
  double m = std::max(a.real(), b.real());
  if (m < 20.0) return std::log(1.0 + gamma * std::exp(a) + (1.0 - gamma) * std::exp(b));
  // 1 is negligible relative to the exponentials only when m is huge; keep it.
  cplx big = (a.real() >= b.real()) ? a : b;
  cplx small = (a.real() >= b.real()) ? b : a;
  double wbig = (a.real() >= b.real()) ? gamma : 1.0 - gamma;
  double wsmall = (a.real() >= b.real()) ? 1.0 - gamma : gamma;
  cplx inner = wbig + wsmall * std::exp(small - big) + std::exp(-big);
  return big + std::log(inner);
}

inline double sup_norm(const std::vector<cplx>& v) {
  double m = 0.0;
  for (const auto& x : v) m = std::max(m, std::abs(x));
  return m;
}

inline std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  vsnprintf(buf, sizeof(buf), f, ap);
  va_end(ap);
  return std::string(buf);
}

// 17 significant digits round-trips IEEE doubles exactly; used by every
// serializer so cached and fresh results compare bit-identically.
inline std::string num17(double x) {
  char buf[64];
  snprintf(buf, sizeof(buf), "%.17g", x);
  return std::string(buf);
}

}  // namespace qnls

#endif
