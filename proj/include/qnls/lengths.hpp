#ifndef QNLS_LENGTHS_HPP
#define QNLS_LENGTHS_HPP

#include "qnls/deformed.hpp"

namespace qnls {

// Decay rate of a subleading channel, evaluated three equivalent ways:
//   contour:  p = i int_C z dl                         (planned contour values)
//   axis:     p = i int_R z dl - i (sum s+ - sum s-)   (crossing term explicit)
//   ratio:    p = P(h)/T - (1/2pi) int_C log(1 + e^{-u/T}) dl
// The spread between them is a combined quadrature and winding diagnostic.
struct RateResult {
  cplx p = 0;
  cplx p_axis = 0;
  cplx p_ratio = 0;
  double spread = 0;
};

// n = 0 rate from the pressure difference between the plain and twisted
// potentials.
inline cplx leading_rate(const ThermalState& th, const ThermalState& th_tw) {
  return (th.pressure - th_tw.pressure) / th.par.T;
}

inline RateResult channel_rate(const DeformedState& D, const ContourPlan& plan) {
  RateResult r;
  r.p = iu * contour_sum(plan.chat, plan.z);

  cplx axis = 0;
  for (int j = 0; j < D.th.grid.size(); ++j)
    axis += D.th.grid.w[j] * (D.Wg[j] - D.th.W[j]);
  cplx cross = 0;
  for (const auto& rs : D.roots) cross += double(rs.sign) * rs.s;
  r.p_axis = -axis / (2.0 * pi) - iu * cross;

  r.p_ratio = D.th.pressure / D.par.T - contour_sum(plan.chat, plan.logU) / (2.0 * pi);

  r.spread = std::max({std::abs(r.p - r.p_axis), std::abs(r.p - r.p_ratio),
                       std::abs(r.p_axis - r.p_ratio)});
  return r;
}

// d p0 / d alpha at alpha = 0 by Richardson-extrapolated central differences.
// P(h) drops out of the difference, so only the twisted pressures enter.  All
// four solves share one grid so truncation errors cancel in the differences.
inline cplx leading_rate_slope(const ModelParams& par, double dalpha = 5e-4,
                               GridSpec gs = {}) {
  ModelParams pr = par;
  pr.alpha = cplx(dalpha, 0);
  if (gs.half_width <= 0 || gs.panels <= 0) {
    QuadGrid qg = gs.resolve(pr);
    gs.half_width = qg.half_width;
    gs.panels = qg.panels;
  }
  auto press = [&](double a) {
    ModelParams pa = par;
    pa.alpha = cplx(a, 0);
    return solve_thermal(pa, pa.h_alpha(), gs).pressure;
  };
  auto slope = [&](double d) {
    return -(press(d) - press(-d)) / (2.0 * d * par.T);
  };
  cplx s1 = slope(dalpha), s2 = slope(dalpha / 2.0);
  return (4.0 * s2 - s1) / 3.0;
}

}  // namespace qnls

#endif
