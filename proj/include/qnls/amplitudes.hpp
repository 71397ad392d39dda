#ifndef QNLS_AMPLITUDES_HPP
#define QNLS_AMPLITUDES_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "qnls/contour.hpp"
#include "qnls/deformed.hpp"
#include "qnls/model.hpp"
#include "qnls/nystrom.hpp"
#include "qnls/poles.hpp"
#include "qnls/solvers.hpp"
#include "qnls/thermo.hpp"

namespace qnls {

// Correlation amplitude of one channel of the long-distance expansion.  Every
// factor is a functional of the channel's counting phase z on its detour
// contour: a shift-regularized double integral, Cauchy transforms of z, two
// resolvent determinants on a closed rectangle surrounding the contour, two
// dressing determinants, and two scalar denominators.

struct AmplitudeOpts {
  double pair_tol = 1e-7;      // dual-method gate on the double integral
  double denom_floor = 1e-8;   // resonance guard on the scalar denominators
  double rect_spacing = 0.12;  // node spacing on the surrounding rectangle
  double rect_pad = 1.0;       // rectangle margin beyond the contour
  int m_max = 3;               // depth of the singularity inventory
  double offset_frac = 0.4;    // shift distance as a fraction of local clearance
  double cap_frac = 0.045;     // node spacing cap as a fraction of the local shift
};

struct PairedIntegral {
  cplx value = 0;       // direct evaluation; on detours the zero-shift extrapolation
  cplx offset1 = 0;     // shifted-path leg at the full shift (detours only)
  cplx offset2 = 0;     // shifted-path leg at half the shift (detours only)
  cplx by_parts = 0;    // independent principal-value evaluation
  double mismatch = 0;  // |value - by_parts|
};

struct AmplitudeResult {
  cplx B = 0;
  cplx double_integral = 0;     // regularized square of z on the contour
  cplx c0 = 0;                  // c-shifted square of z
  cplx det_u1 = 1, det_u2 = 1;  // resolvent determinants on the rectangle
  cplx det_keps = 1;            // dressing determinant on the real line
  cplx det_ku = 1;              // dressing determinant on the detour contour
  cplx denom1 = 1, denom2 = 1;  // scalar prefactor denominators; at zero twist
                                // the reduced 2 pi rho_t(theta) values
  cplx theta1 = 0, theta2 = 0;  // probe points actually used
  double theta_spread = 0;      // relative B variation over probe choices
  double min_denom = 0;         // smallest modulus among all denominators
  double di_mismatch = 0;       // dual-method gap of the double integral
};

namespace detail {

inline cplx det_idx(int n, const std::function<cplx(int, int)>& a) {
  Eigen::MatrixXcd M(n, n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) M(j, k) = a(j, k);
  return Eigen::PartialPivLU<Eigen::MatrixXcd>(M).determinant();
}

inline double seg_distance(cplx a, cplx b, cplx p) {
  cplx d = b - a;
  double L2 = std::norm(d);
  if (L2 == 0) return std::abs(p - a);
  double t = std::clamp(((p - a) * std::conj(d)).real() / L2, 0.0, 1.0);
  return std::abs(p - a - t * d);
}

inline double cross2(cplx a, cplx b) { return (std::conj(a) * b).imag(); }

// Double integral of nu(l) nu(m) / (l - m)^2 with m shifted to the left of
// the contour, done by parts in m: the boundary terms vanish for decaying nu
// and the half-residue of the left shift gives
//   D = int nu(l) [ PV int nu'(m)/(m - l) dm  -  i pi nu'(l) ] dl.
// The principal value combines the subtracted sum, the diagonal derivative,
// and the panel-aware endpoint log kernel.
inline cplx square_by_parts(const Contour& c, const std::vector<cplx>& nu,
                            const std::vector<cplx>& d1, const std::vector<cplx>& d2) {
  const int n = c.size();
  cplx total = 0;
  for (int j = 0; j < n; ++j) {
    cplx pv = c.w[j] * d2[j] + d1[j] * (pv_log_kernel(c, j) - iu * pi);
    for (int k = 0; k < n; ++k)
      if (k != j) pv += c.w[k] * (d1[k] - d1[j]) / (c.x[k] - c.x[j]);
    total += c.w[j] * nu[j] * pv;
  }
  return total;
}

// Same double integral with the m integral on an explicitly shifted contour,
// where the kernel is regular and plain quadrature applies.
inline cplx square_cross(const Contour& c, const std::vector<cplx>& nu, const Contour& oc,
                         const std::vector<cplx>& nuo) {
  const int n = c.size(), m = oc.size();
  std::vector<cplx> wz(m);
  for (int k = 0; k < m; ++k) wz[k] = oc.w[k] * nuo[k];
  cplx total = 0;
  for (int j = 0; j < n; ++j) {
    if (std::abs(nu[j]) < 1e-300) continue;
    cplx s = 0;
    for (int k = 0; k < m; ++k) {
      cplx d = c.x[j] - oc.x[k];
      s += wz[k] / (d * d);
    }
    total += c.w[j] * nu[j] * s;
  }
  return total;
}

struct OffsetPolyline {
  std::vector<cplx> verts;
  std::vector<double> spac;
};

// Left offset of a polyline with per-segment distances.  Corners meet in a
// miter; parallel neighbours with different distances join by a right-angle
// jog.  Anti-parallel neighbours never occur on the planned detours.
inline OffsetPolyline shift_polyline(const std::vector<cplx>& v, const std::vector<double>& delta,
                                     const std::vector<double>& spac, double scale) {
  const int m = static_cast<int>(v.size()) - 1;
  std::vector<cplx> t(m), nrm(m);
  for (int i = 0; i < m; ++i) {
    t[i] = (v[i + 1] - v[i]) / std::abs(v[i + 1] - v[i]);
    nrm[i] = iu * t[i];
  }
  OffsetPolyline o;
  o.verts.push_back(v[0] + scale * delta[0] * nrm[0]);
  auto push = [&](cplx p, double sp) {
    o.verts.push_back(p);
    o.spac.push_back(sp);
  };
  for (int i = 0; i + 1 < m; ++i) {
    cplx p1 = v[i + 1] + scale * delta[i] * nrm[i];
    cplx p2 = v[i + 1] + scale * delta[i + 1] * nrm[i + 1];
    double cr = cross2(t[i], t[i + 1]);
    if (std::abs(cr) < 1e-9) {
      if (std::abs(p1 - p2) > 1e-13) {
        push(p1, spac[i]);
        push(p2, std::min(spac[i], spac[i + 1]));
      } else {
        push(p1, spac[i]);
      }
    } else {
      double a = cross2(p2 - p1, t[i + 1]) / cr;
      push(p1 + a * t[i], spac[i]);
    }
  }
  push(v[m] + scale * delta[m - 1] * nrm[m - 1], spac[m - 1]);
  return o;
}

}  // namespace detail

// Shift-regularized square of nu on the contour.  The double pole is
// integrated directly: a two-term Taylor subtraction at the diagonal leaves a
// regular remainder for plain quadrature, the subtracted monomials integrate
// exactly (telescoping endpoint kernel and panel-aware principal log), and
// the left-shift prescription enters only through the half-residue -i pi of
// the simple-pole term.  No shifted path is needed, so nu is used only at
// the given nodes; an independent by-parts evaluation must agree to
// pair_tol.  Spectral derivatives supply the subtraction, so nu must be
// panel-resolved.
inline PairedIntegral paired_square_integral(const Contour& c, const std::vector<cplx>& nu,
                                             double pair_tol = 1e-7) {
  std::vector<cplx> d1 = contour_derivative(c, nu);
  std::vector<cplx> d2 = contour_derivative(c, d1);
  PairedIntegral P;
  P.by_parts = detail::square_by_parts(c, nu, d1, d2);
  const cplx v0 = c.vertices.front(), v1 = c.vertices.back();
  const int n = c.size();
  cplx total = 0;
  for (int j = 0; j < n; ++j) {
    if (std::abs(nu[j]) < 1e-300) continue;
    const cplx xj = c.x[j];
    cplx F = 0.5 * c.w[j] * d2[j] + nu[j] * (1.0 / (xj - v1) - 1.0 / (xj - v0)) +
             d1[j] * (pv_log_kernel(c, j) - iu * pi);
    for (int k = 0; k < n; ++k) {
      if (k == j) continue;
      cplx dx = c.x[k] - xj;
      F += c.w[k] * (nu[k] - nu[j] - dx * d1[j]) / (dx * dx);
    }
    total += c.w[j] * nu[j] * F;
  }
  P.value = total;
  P.mismatch = std::abs(P.value - P.by_parts);
  require(P.mismatch <= pair_tol, ErrKind::extrapolation_disagrees,
          fmt("paired integral: dual methods differ by %g", P.mismatch));
  return P;
}

// A-functional of a channel: -int (i x + g'(l)) nu(l) dl plus the
// shift-regularized square of nu.  g' is the spectral derivative of the
// supplied g values.
inline cplx a_functional(const Contour& c, const std::vector<cplx>& g, const std::vector<cplx>& nu,
                         double x, double pair_tol = 1e-7) {
  std::vector<cplx> gp = contour_derivative(c, g);
  cplx lin = 0;
  for (int j = 0; j < c.size(); ++j) lin -= c.w[j] * (iu * x + gp[j]) * nu[j];
  return lin + paired_square_integral(c, nu, pair_tol).value;
}

// Square of z against the c-shifted kernel 1/(l - m - ic)^2.  Regular as long
// as the contour's vertical extent stays below the shift c.
inline cplx c0_functional(const Contour& c, const std::vector<cplx>& z, const ModelParams& par) {
  if (par.c_inf) return 0;
  double ymin = 1e300, ymax = -1e300;
  for (const cplx& x : c.x) {
    ymin = std::min(ymin, x.imag());
    ymax = std::max(ymax, x.imag());
  }
  require(ymax - ymin <= par.c - 0.25, ErrKind::cannot_separate,
          fmt("contour spans %g vertically, too close to the kernel shift c = %g", ymax - ymin,
              par.c));
  const cplx ic = iu * par.c;
  const int n = c.size();
  std::vector<cplx> wz(n);
  for (int k = 0; k < n; ++k) wz[k] = c.w[k] * z[k];
  cplx total = 0;
  for (int j = 0; j < n; ++j) {
    if (std::abs(z[j]) < 1e-300) continue;
    cplx s = 0;
    for (int k = 0; k < n; ++k) {
      cplx d = c.x[j] - c.x[k] - ic;
      s += wz[k] / (d * d);
    }
    total += c.w[j] * z[j] * s;
  }
  return total;
}

namespace detail {

// Branch points of z reachable by the shifted contours: Fermi-weight poles,
// the selected roots, and the remaining zeros of 1 + e^{-u/T} near the
// twisted seed lattice.  A seed whose refinement stalls is kept as is; extra
// clearance points are harmless.
inline std::vector<cplx> weight_singularities(const DeformedState& D, const PoleTable& poles,
                                              int m_max) {
  std::vector<cplx> out;
  for (const auto& e : poles.entries) out.push_back(e.root);
  for (const auto& r : D.roots) out.push_back(r.s);
  const double T = D.par.T;
  const double lim = 0.85 * D.par.strip();
  auto f = [&](cplx z) { return 1.0 + std::exp(-D.u_at(z) / T); };
  auto fp = [&](cplx z) { return -D.u_d_at(z) / T * std::exp(-D.u_at(z) / T); };
  for (int m = 0; m <= m_max; ++m)
    for (int half : {+1, -1})
      for (char side : {'R', 'L'}) {
        cplx seed = pole_seed(D.par.h_alpha(), T, PoleKey{half, side, m});
        if (std::abs(seed.imag()) > lim) continue;
        SolverReport rep;
        cplx root = newton_root(f, fp, seed, 1e-10, 40, 0.5, &rep);
        out.push_back(rep.converged ? root : seed);
      }
  std::vector<cplx> uniq;
  for (const cplx& p : out) {
    bool dup = false;
    for (const cplx& q : uniq) dup = dup || std::abs(p - q) < 1e-6;
    if (!dup) uniq.push_back(p);
  }
  return uniq;
}

struct ChannelGeometry {
  std::vector<cplx> verts;    // subdivision of the detour polyline
  std::vector<double> delta;  // full-scale shift per sub-segment
  std::vector<double> spac;   // node spacing per sub-segment
};

// Subdivide the detour so the shift distance follows the local clearance,
// changing by at most x1.6 between neighbouring sub-segments, with node
// spacing capped by the local shift so the half-shift offset stays
// resolvable from the unshifted nodes.  Junction shifts are limited to what
// both adjoining ramps actually attain, and every corner junction keeps a
// straight reserve longer than the neighbour's miter reach so the offset
// polyline never doubles back over a jog.
inline ChannelGeometry ramp_geometry(const std::vector<cplx>& verts,
                                     const std::vector<double>& spac0,
                                     const std::vector<cplx>& sing, const AmplitudeOpts& opts) {
  const int ns = static_cast<int>(verts.size()) - 1;
  std::vector<double> own(ns), len(ns);
  std::vector<cplx> dir(ns);
  for (int s = 0; s < ns; ++s) {
    double d = 2.0;
    for (const cplx& p : sing) d = std::min(d, seg_distance(verts[s], verts[s + 1], p));
    require(d > 5e-3, ErrKind::cannot_separate,
            fmt("detour segment %d passes %g from a weight singularity", s, d));
    own[s] = opts.offset_frac * d;
    len[s] = std::abs(verts[s + 1] - verts[s]);
    dir[s] = (verts[s + 1] - verts[s]) / len[s];
  }
  const double grow = 1.6;
  auto reach = [&](int s, double j0, double x) {
    double d = std::min(j0, own[s]), pos = 0;
    while (d < own[s] && pos + 5.0 * d < x) {
      pos += 5.0 * d;
      d = std::min(d * grow, own[s]);
    }
    return d;
  };
  std::vector<double> jn(ns + 1);
  jn[0] = own[0];
  jn[ns] = own[ns - 1];
  for (int s = 1; s < ns; ++s) jn[s] = std::min(own[s - 1], own[s]);
  for (int sweep = 0; sweep < 4; ++sweep)
    for (int s = 1; s < ns; ++s)
      jn[s] = std::min(
          jn[s], std::min(reach(s - 1, jn[s - 1], len[s - 1]), reach(s, jn[s + 1], len[s])));
  std::vector<double> resv(ns + 1, 0.0);
  for (int s = 1; s < ns; ++s)
    if (std::abs(cross2(dir[s - 1], dir[s])) > 1e-9) resv[s] = 1.5 * jn[s];
  ChannelGeometry g;
  g.verts.push_back(verts[0]);
  for (int s = 0; s < ns; ++s) {
    const double ja = jn[s], jb = jn[s + 1];
    require(len[s] > 1.2 * std::max(ja, jb), ErrKind::cannot_separate,
            fmt("detour segment %d too short for its junction shifts", s));
    std::vector<double> cuts{0.0, len[s]};
    for (double pos = 0, d = ja; d < own[s] && pos + 5.0 * d < len[s] - resv[s + 1];) {
      pos += 5.0 * d;
      d = std::min(d * grow, own[s]);
      cuts.push_back(pos);
    }
    for (double pos = len[s], d = jb; d < own[s] && pos - 5.0 * d > resv[s];) {
      pos -= 5.0 * d;
      d = std::min(d * grow, own[s]);
      cuts.push_back(pos);
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end(),
                           [&](double a, double b) { return b - a < 1e-9 * len[s]; }),
               cuts.end());
    cuts.back() = len[s];
    for (size_t i = 0; i + 1 < cuts.size(); ++i) {
      double mid = 0.5 * (cuts[i] + cuts[i + 1]);
      double d = std::min(reach(s, ja, mid), reach(s, jb, len[s] - mid));
      g.verts.push_back(i + 2 == cuts.size() ? verts[s + 1] : verts[s] + cuts[i + 1] * dir[s]);
      g.delta.push_back(d);
      g.spac.push_back(std::min(spac0[s], opts.cap_frac * d));
    }
  }
  return g;
}

struct RefinedChannel {
  Contour chat;
  std::vector<cplx> z, d1, d2;  // counting phase and derivatives at the nodes
  ChannelGeometry geo;
};

// Re-sample the detour at offset-capable resolution and evaluate z with its
// analytic derivatives there.  The branch of z is tracked along the path and
// must return to zero winding at the far end.
inline RefinedChannel refine_channel(const DeformedState& D, const ContourPlan& plan,
                                     const std::vector<cplx>& sing, const AmplitudeOpts& opts) {
  RefinedChannel rc;
  rc.geo = ramp_geometry(plan.verts, plan.spac, sing, opts);
  rc.chat = make_contour(rc.geo.verts, plan.chat.order, rc.geo.spac);
  const double T = D.par.T;
  auto fu = [&](cplx z) { return 1.0 + std::exp(-D.u_at(z) / T); };
  auto fe = [&](cplx z) { return 1.0 + std::exp(-D.th.eps_at(z) / T); };
  UnwrapResult Ru = unwrapped_log(rc.chat, fu);
  UnwrapResult Re_ = unwrapped_log(rc.chat, fe);
  cplx drift = (Ru.end_log - Ru.start_log) - (Re_.end_log - Re_.start_log);
  require(std::abs(drift - plan.end_drift) < 1e-6, ErrKind::branch_jump,
          fmt("refined detour winding drifted by %g from the plan", std::abs(drift)));
  const int n = rc.chat.size();
  rc.z.resize(n);
  rc.d1.resize(n);
  rc.d2.resize(n);
  for (int k = 0; k < n; ++k) {
    rc.z[k] = -(Ru.log_vals[k] - Re_.log_vals[k]) / (2.0 * pi * iu);
    cplx x = rc.chat.x[k];
    cplx up = D.u_d_at(x), ep = D.th.eps_d_at(x);
    cplx upp = D.u_dd_at(x), epp = D.th.eps_dd_at(x);
    cplx pu = fermi_of(D.u_at(x) / T), pe = fermi_of(D.th.eps_at(x) / T);
    rc.d1[k] = (up * pu - ep * pe) / (2.0 * pi * iu * T);
    rc.d2[k] = (-pu * (1.0 - pu) * up * up / T + pu * upp + pe * (1.0 - pe) * ep * ep / T -
                pe * epp) /
               (2.0 * pi * iu * T);
  }
  return rc;
}

// Dual-method square of z on the refined detour.  The offset legs re-derive
// the branch of z on the shifted path instead of continuing node values,
// since the shift can exceed the interpolation's reliable reach.
inline PairedIntegral channel_square(const DeformedState& D, const ContourPlan& plan,
                                     const RefinedChannel& rc, const AmplitudeOpts& opts) {
  PairedIntegral P;
  P.by_parts = square_by_parts(rc.chat, rc.z, rc.d1, rc.d2);
  const double T = D.par.T;
  auto fu = [&](cplx z) { return 1.0 + std::exp(-D.u_at(z) / T); };
  auto fe = [&](cplx z) { return 1.0 + std::exp(-D.th.eps_at(z) / T); };
  cplx ov[2];
  for (int leg = 0; leg < 2; ++leg) {
    OffsetPolyline op =
        shift_polyline(rc.geo.verts, rc.geo.delta, rc.geo.spac, leg == 0 ? 1.0 : 0.5);
    Contour oc = make_contour(op.verts, rc.chat.order, op.spac);
    UnwrapResult Ru = unwrapped_log(oc, fu);
    UnwrapResult Re_ = unwrapped_log(oc, fe);
    cplx drift = (Ru.end_log - Ru.start_log) - (Re_.end_log - Re_.start_log);
    require(std::abs(drift - plan.end_drift) < 1e-6, ErrKind::branch_jump,
            fmt("offset path winding drifted by %g from the plan", std::abs(drift)));
    std::vector<cplx> zo(oc.size());
    for (int k = 0; k < oc.size(); ++k)
      zo[k] = -(Ru.log_vals[k] - Re_.log_vals[k]) / (2.0 * pi * iu);
    ov[leg] = square_cross(rc.chat, rc.z, oc, zo);
  }
  P.offset1 = ov[0];
  P.offset2 = ov[1];
  P.value = 2.0 * ov[1] - ov[0];
  P.mismatch = std::abs(P.value - P.by_parts);
  require(P.mismatch <= opts.pair_tol, ErrKind::extrapolation_disagrees,
          fmt("channel square: dual methods differ by %g", P.mismatch));
  return P;
}

inline cplx place_theta(cplx want, const Contour& chat, double xmax, double clear) {
  for (double dx : {0.0, 0.7, -0.7, 1.4, -1.4, 2.1, -2.1, 2.8, -2.8}) {
    cplx cand = want + dx;
    if (std::abs(cand.real()) > xmax) continue;
    if (chat.min_distance(cand) >= clear) return cand;
  }
  fail(ErrKind::cannot_separate, "no clear probe point for the amplitude prefactors");
}

}  // namespace detail

// Channel with no subsidiary roots: u is the twisted thermal solution on the
// base grid and the detour stays on the real axis.
inline DeformedState make_leading_channel(const ThermalState& th, cplx alpha, double tol = 1e-12) {
  require(th.mu == cplx(th.par.h), ErrKind::bad_input,
          "leading channel needs the untwisted base state");
  DeformedState D;
  D.par = th.par;
  D.par.alpha = alpha;
  D.th = th;
  D.gamma = 1.0;
  GridSpec gs{th.grid.half_width, th.grid.panels, th.grid.order};
  ThermalState tw = solve_thermal(D.par, D.par.h_alpha(), gs, tol);
  D.u = tw.eps;
  D.report = tw.report;
  D.grid_residual = tw.report.residual;
  detail::refresh_blend(D);
  return D;
}

// Amplitude of the channel described by a fully deformed state.  theta1 and
// theta2 are probe points for the prefactors; zero means automatic placement
// at mid-height of the surrounding rectangle, nudged off the contour.  The
// probe independence of B is reported as theta_spread over three choices.
inline AmplitudeResult amplitude_B(const DeformedState& D, cplx theta1 = 0, cplx theta2 = 0,
                                   const AmplitudeOpts& opts = {}) {
  require(D.gamma == 1.0, ErrKind::bad_input, "amplitude needs the fully deformed state");
  const ModelParams& par = D.par;
  const double T = par.T;
  const cplx q = std::exp(2.0 * pi * iu * par.alpha);
  PoleTable poles = locate_poles(D.th, opts.m_max);
  ContourPlan plan = plan_contour(D, poles);
  const bool zero_twist = par.alpha == cplx(0);
  AmplitudeResult R;

  const QuadGrid& gr = D.th.grid;
  const int ng = gr.size();
  auto K = [&](cplx v) { return lieb_kernel(par, v); };
  auto Ka = [&](cplx v) { return kernel_alpha(par, v); };

  // dressing determinants; the kernel-free gas leaves both at one
  const Contour& ch = plan.chat;
  cplx dkeps = 1, dku = 1;
  if (!par.c_inf) {
    dkeps = detail::det_idx(ng, [&](int j, int k) {
      cplx m = -K(cplx(gr.x[j] - gr.x[k])) * D.th.theta[k] * gr.w[k] / (2.0 * pi);
      return j == k ? m + 1.0 : m;
    });
    std::vector<cplx> phi_u(ch.size());
    for (int k = 0; k < ch.size(); ++k) phi_u[k] = fermi_of(D.u_at(ch.x[k]) / T);
    dku = detail::det_idx(ch.size(), [&](int j, int k) {
      cplx m = -K(ch.x[j] - ch.x[k]) * phi_u[k] * ch.w[k] / (2.0 * pi);
      return j == k ? m + 1.0 : m;
    });
  }
  R.det_keps = dkeps;
  R.det_ku = dku;

  if (zero_twist && D.roots.empty()) {
    // Untwisted leading channel: z vanishes identically, the square and the
    // c-shifted square are zero, and each resolvent determinant divided by
    // the dressing determinant reduces to 2 pi rho_t(theta), so B = 1 up to
    // quadrature.  Computed explicitly to keep the diagnostics honest.
    double H = std::min(opts.rect_pad, par.c_inf ? opts.rect_pad : 0.45 * par.c);
    double xmax = gr.half_width - 1.0;
    auto eval = [&](cplx t1, cplx t2) {
      cplx det1 = detail::det_idx(ng, [&](int j, int k) {
        cplx m = -(K(cplx(gr.x[j] - gr.x[k])) - K(t1 - gr.x[k])) * D.th.theta[k] * gr.w[k] /
                 (2.0 * pi);
        return j == k ? m + 1.0 : m;
      });
      cplx det2 = detail::det_idx(ng, [&](int j, int k) {
        cplx m = -(K(cplx(gr.x[j] - gr.x[k])) - K(cplx(gr.x[j]) - t2)) * D.th.theta[k] * gr.w[k] /
                 (2.0 * pi);
        return j == k ? m + 1.0 : m;
      });
      cplx r1 = 2.0 * pi * D.th.rho_t_at(t1);
      cplx r2 = 2.0 * pi * D.th.rho_t_at(t2);
      return std::array<cplx, 5>{det1 * det2 / (r1 * r2 * dkeps * dkeps), det1, det2, r1, r2};
    };
    cplx b1 = theta1 != cplx(0) ? theta1 : detail::place_theta(iu * 0.5 * H, ch, xmax, 0.3);
    cplx b2 = theta2 != cplx(0) ? theta2 : detail::place_theta(-iu * 0.5 * H, ch, xmax, 0.3);
    auto base = eval(b1, b2);
    R.B = base[0];
    R.det_u1 = base[1];
    R.det_u2 = base[2];
    R.denom1 = base[3];
    R.denom2 = base[4];
    R.theta1 = b1;
    R.theta2 = b2;
    R.min_denom = std::min(std::abs(base[3]), std::abs(base[4]));
    std::array<std::pair<cplx, cplx>, 2> vars = {
        std::make_pair(detail::place_theta(b1 + 0.7, ch, xmax, 0.3),
                       detail::place_theta(b2 + 0.7, ch, xmax, 0.3)),
        std::make_pair(detail::place_theta(iu * 0.75 * H, ch, xmax, 0.3),
                       detail::place_theta(-iu * 0.35 * H, ch, xmax, 0.3))};
    for (const auto& v : vars) {
      auto alt = eval(v.first, v.second);
      R.min_denom = std::min({R.min_denom, std::abs(alt[3]), std::abs(alt[4])});
      R.theta_spread =
          std::max(R.theta_spread, std::abs(alt[0] - R.B) / std::max(std::abs(R.B), 1e-300));
    }
    require(R.min_denom >= opts.denom_floor, ErrKind::small_denominator,
            fmt("probe density 2 pi rho_t fell to %g", R.min_denom));
    return R;
  }

  if (par.c_inf && !zero_twist) {
    // Kernel-free gas: every determinant is exactly one, the scalar
    // denominators collapse against the twist prefactor, and B = exp of the
    // regularized square of z.
    R.min_denom = std::abs(1.0 - q);
    require(R.min_denom >= opts.denom_floor, ErrKind::small_denominator,
            fmt("twist prefactor 1 - q has modulus %g", R.min_denom));
    for (const auto& lb : plan.lobes)
      require(!lb.eight(), ErrKind::cannot_separate,
              "conjugate roots overlap in Re: no simple detour at this twist");
    std::vector<cplx> sing = detail::weight_singularities(D, poles, opts.m_max);
    detail::RefinedChannel rc = detail::refine_channel(D, plan, sing, opts);
    PairedIntegral P = detail::channel_square(D, plan, rc, opts);
    R.double_integral = P.value;
    R.di_mismatch = P.mismatch;
    R.denom1 = R.denom2 = 1.0 - q;
    R.B = std::exp(P.value);
    return R;
  }

  // rectangle surrounding the detour, kept below half the kernel shift
  double y_up = 0, y_dn = 0;
  for (const auto& lb : plan.lobes) {
    y_up = std::max(y_up, lb.y_up);
    y_dn = std::max(y_dn, lb.y_dn);
  }
  double ym = std::min(opts.rect_pad, 0.35 * (par.c - y_up - y_dn));
  double Hup = std::min(y_up + ym, 0.45 * par.c);
  double Hdn = std::min(y_dn + ym, 0.45 * par.c);
  require(Hup >= y_up + 0.2 && Hdn >= y_dn + 0.2, ErrKind::cannot_separate,
          "detour too tall for the surrounding rectangle");
  const double L = gr.half_width;
  Contour rect = rectangle_contour(-L - opts.rect_pad, L + opts.rect_pad, -Hdn, Hup, ch.order,
                                   opts.rect_spacing);
  const int nr = rect.size();

  auto LT = [&](cplx w) { return cauchy_sum(ch, plan.z, w); };
  const cplx ic = iu * par.c;
  std::vector<cplx> EL(nr), D1(nr), D2(nr);
  double dmin = 1e300;
  for (int j = 0; j < nr; ++j) {
    cplx w = rect.x[j];
    EL[j] = std::exp(LT(w));
    D1[j] = std::exp(LT(w + ic)) - q * std::exp(LT(w - ic));
    D2[j] = std::exp(-LT(w - ic)) - q * std::exp(-LT(w + ic));
    dmin = std::min({dmin, std::abs(D1[j]), std::abs(D2[j])});
  }

  auto prefactors = [&](cplx t1, cplx t2) {
    cplx den1 = std::exp(LT(t1 + ic)) - q * std::exp(LT(t1 - ic));
    cplx den2 = std::exp(-LT(t2 - ic)) - q * std::exp(-LT(t2 + ic));
    std::vector<cplx> col1(nr), col2(nr);
    for (int k = 0; k < nr; ++k) col1[k] = Ka(t1 - rect.x[k]);
    for (int k = 0; k < nr; ++k) col2[k] = Ka(rect.x[k] - t2);
    cplx det1 = detail::det_idx(nr, [&](int j, int k) {
      cplx U = -EL[j] * (Ka(rect.x[j] - rect.x[k]) - col1[k]) / D1[j];
      cplx m = U * rect.w[k] / (2.0 * pi * iu);
      return j == k ? m + 1.0 : m;
    });
    cplx det2 = detail::det_idx(nr, [&](int j, int k) {
      cplx U = (Ka(rect.x[j] - rect.x[k]) - col2[j]) / (EL[k] * D2[k]);
      cplx m = U * rect.w[k] / (2.0 * pi * iu);
      return j == k ? m + 1.0 : m;
    });
    return std::array<cplx, 4>{den1, den2, det1, det2};
  };

  double xmax = L + opts.rect_pad - 0.7;
  cplx b1 = theta1 != cplx(0) ? theta1 : detail::place_theta(iu * 0.5 * Hup, ch, xmax, 0.3);
  cplx b2 = theta2 != cplx(0) ? theta2 : detail::place_theta(-iu * 0.5 * Hdn, ch, xmax, 0.3);
  auto base = prefactors(b1, b2);
  R.denom1 = base[0];
  R.denom2 = base[1];
  R.det_u1 = base[2];
  R.det_u2 = base[3];
  R.theta1 = b1;
  R.theta2 = b2;
  R.min_denom = std::min({dmin, std::abs(base[0]), std::abs(base[1])});

  R.c0 = c0_functional(ch, plan.z, par);

  if (zero_twist) {
    // Conjugate-symmetric selection at zero twist: the detour self-touches
    // where the branch of z jumps, so the regularized square is not defined
    // there; it is also not needed, since the (q - 1)^2 prefactor vanishes
    // while every other factor stays finite.  B = 0 exactly.
    R.B = 0;
    return R;
  }

  require(R.min_denom >= opts.denom_floor, ErrKind::small_denominator,
          fmt("amplitude denominator fell to %g", R.min_denom));
  for (const auto& lb : plan.lobes)
    require(!lb.eight(), ErrKind::cannot_separate,
            "conjugate roots overlap in Re: no simple detour at this twist");

  std::vector<cplx> sing = detail::weight_singularities(D, poles, opts.m_max);
  detail::RefinedChannel rc = detail::refine_channel(D, plan, sing, opts);
  PairedIntegral P = detail::channel_square(D, plan, rc, opts);
  R.double_integral = P.value;
  R.di_mismatch = P.mismatch;

  cplx core = (q - 1.0) * (q - 1.0) * std::exp(P.value - R.c0) / (dkeps * dku);
  R.B = core * base[2] * base[3] / (base[0] * base[1]);

  std::array<std::pair<cplx, cplx>, 2> vars = {
      std::make_pair(detail::place_theta(b1 + 0.7, ch, xmax, 0.3),
                     detail::place_theta(b2 + 0.7, ch, xmax, 0.3)),
      std::make_pair(detail::place_theta(iu * 0.75 * Hup, ch, xmax, 0.3),
                     detail::place_theta(-iu * 0.35 * Hdn, ch, xmax, 0.3))};
  for (const auto& v : vars) {
    auto alt = prefactors(v.first, v.second);
    cplx Bv = core * alt[2] * alt[3] / (alt[0] * alt[1]);
    R.min_denom = std::min({R.min_denom, std::abs(alt[0]), std::abs(alt[1])});
    R.theta_spread =
        std::max(R.theta_spread, std::abs(Bv - R.B) / std::max(std::abs(R.B), 1e-300));
  }
  return R;
}

// Partial long-distance sum over supplied channels at separation x.
inline cplx asymptotic_sum(const std::vector<cplx>& p, const std::vector<cplx>& B, double x) {
  require(p.size() == B.size(), ErrKind::bad_input, "rate and amplitude lists differ in length");
  cplx s = 0;
  for (size_t i = 0; i < p.size(); ++i) s += B[i] * std::exp(-x * p[i]);
  return s;
}

}  // namespace qnls

#endif
