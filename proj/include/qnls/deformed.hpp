#ifndef QNLS_DEFORMED_HPP
#define QNLS_DEFORMED_HPP

#include <sstream>

#include "qnls/poles.hpp"

namespace qnls {

// Root selection for a subleading channel: which Fermi-weight poles the
// deformed contour threads through.  Text form "+R0,+R1;-R0,-L1": plus list
// before the ';' (upper half-plane roots), minus list after.  Levels are
// counted from 0 at the real axis.
struct RootSelection {
  std::vector<PoleKey> plus, minus;
  std::string text;

  bool empty() const { return plus.empty() && minus.empty(); }
  size_t pairs() const { return plus.size(); }
};

inline RootSelection parse_selection(const std::string& s) {
  RootSelection sel;
  sel.text = s;
  auto parse_side = [](const std::string& part, int half, std::vector<PoleKey>& out) {
    std::stringstream ss(part);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      std::string t;
      for (char c : tok)
        if (!isspace(static_cast<unsigned char>(c))) t += c;
      if (t.empty()) continue;
      char sign = (half > 0) ? '+' : '-';
      require(t.size() >= 3 && t[0] == sign && (t[1] == 'R' || t[1] == 'L'), ErrKind::bad_input,
              "selection token '" + t + "' must look like " + sign + "R0 or " + sign + "L2");
      int m = 0;
      try {
        size_t used = 0;
        m = std::stoi(t.substr(2), &used);
        require(used == t.size() - 2 && m >= 0, ErrKind::bad_input, "bad level in '" + t + "'");
      } catch (const std::logic_error&) {
        fail(ErrKind::bad_input, "bad level in '" + t + "'");
      }
      out.push_back({half, t[1], m});
    }
  };
  size_t semi = s.find(';');
  std::string p1 = (semi == std::string::npos) ? s : s.substr(0, semi);
  std::string p2 = (semi == std::string::npos) ? "" : s.substr(semi + 1);
  parse_side(p1, +1, sel.plus);
  parse_side(p2, -1, sel.minus);
  require(sel.plus.size() == sel.minus.size(), ErrKind::bad_input,
          "selection must pair each upper root with a lower one (got " +
              std::to_string(sel.plus.size()) + " vs " + std::to_string(sel.minus.size()) + ")");
  for (size_t a = 0; a < sel.plus.size(); ++a)
    for (size_t b = a + 1; b < sel.plus.size(); ++b) {
      require(!(sel.plus[a] == sel.plus[b]), ErrKind::bad_input, "duplicate upper root");
      require(!(sel.minus[a] == sel.minus[b]), ErrKind::bad_input, "duplicate lower root");
    }
  return sel;
}

struct RootState {
  PoleKey key;
  int sign = +1;  // +1 for the plus list, -1 for minus
  cplx s = 0;
  double residual = 0;
};

struct DeformOpts {
  int gamma_steps = 8;
  double tol = 1e-11;
  int max_outer = 80;
  int max_inner = 400;
  double min_gamma_step = 1.0 / 256.0;
};

// State of the deformed nonlinear integral equation
//   u(l) = l^2 - h_a - (T/2pi) int K(l-m) log B(m) dm
//          - i T sum_a [theta(s+_a - l) - theta(s-_a - l)]
// with the homotopy blend B = 1 + g e^{-u/T} + (1-g) e^{-eps/T} and the root
// demand B(s_a) = 0.  At g=0 the roots are the Fermi-weight poles; at g=1 the
// equation is the subleading-channel equation proper.
struct DeformedState {
  ModelParams par;  // alpha included
  ThermalState th;  // thermal state at the untwisted potential h
  RootSelection sel;
  double gamma = 0;
  std::vector<cplx> u;
  std::vector<cplx> Wg;  // log B on the grid, branch-continuous, ~0 at both ends
  std::vector<RootState> roots;
  SolverReport report;
  double grid_residual = 0;
  double root_residual = 0;

  cplx driving(cplx l) const {
    if (par.c_inf) return 0;
    cplx acc = 0;
    for (const auto& r : roots) acc += double(r.sign) * theta_fn(par, r.s - l);
    return -iu * par.T * acc;
  }

  cplx driving_d(cplx l) const {
    if (par.c_inf) return 0;
    cplx acc = 0;
    for (const auto& r : roots) acc += double(r.sign) * lieb_kernel(par, r.s - l);
    return iu * par.T * acc;
  }

  cplx u_at(cplx l) const {
    cplx v = l * l - par.h_alpha();
    if (!par.c_inf) {
      require(std::abs(l.imag()) < par.strip(), ErrKind::outside_strip,
              fmt("u continuation at Im l = %g beyond 0.9c", l.imag()));
      cplx conv = 0;
      for (int k = 0; k < th.grid.size(); ++k)
        conv += lieb_kernel(par, l - cplx(th.grid.x[k])) * Wg[k] * th.grid.w[k];
      v -= par.T * conv / (2.0 * pi);
    }
    return v + driving(l);
  }

  cplx u_d_at(cplx l) const {
    cplx v = 2.0 * l;
    if (!par.c_inf) {
      require(std::abs(l.imag()) < par.strip(), ErrKind::outside_strip,
              fmt("u' continuation at Im l = %g beyond 0.9c", l.imag()));
      cplx conv = 0;
      for (int k = 0; k < th.grid.size(); ++k)
        conv += lieb_kernel_d(par, l - cplx(th.grid.x[k])) * Wg[k] * th.grid.w[k];
      v -= par.T * conv / (2.0 * pi);
    }
    return v + driving_d(l);
  }

  cplx u_dd_at(cplx l) const {
    cplx v = 2.0;
    if (par.c_inf) return v;
    require(std::abs(l.imag()) < par.strip(), ErrKind::outside_strip,
            fmt("u'' continuation at Im l = %g beyond 0.9c", l.imag()));
    cplx conv = 0;
    for (int k = 0; k < th.grid.size(); ++k)
      conv += lieb_kernel_dd(par, l - cplx(th.grid.x[k])) * Wg[k] * th.grid.w[k];
    v -= par.T * conv / (2.0 * pi);
    cplx dd = 0;
    for (const auto& r : roots) dd += double(r.sign) * lieb_kernel_d(par, r.s - l);
    return v - iu * par.T * dd;
  }

  // homotopy demand function and its derivative
  cplx demand(cplx l) const {
    return 1.0 + gamma * std::exp(-u_at(l) / par.T) +
           (1.0 - gamma) * std::exp(-th.eps_at(l) / par.T);
  }
  cplx demand_d(cplx l) const {
    return -gamma / par.T * u_d_at(l) * std::exp(-u_at(l) / par.T) -
           (1.0 - gamma) / par.T * th.eps_d_at(l) * std::exp(-th.eps_at(l) / par.T);
  }

  // z = -(1/2pi i) log[(1 + e^{-u/T})/(1 + e^{-eps/T})]; derivative form used
  // by the amplitude double integral (only valid at gamma = 1).
  cplx z_d_at(cplx l) const {
    cplx up = u_d_at(l), ed = th.eps_d_at(l);
    return (up * fermi_of(u_at(l) / par.T) - ed * fermi_of(th.eps_at(l) / par.T)) /
           (2.0 * pi * iu * par.T);
  }
};

namespace detail {

inline void refresh_blend(DeformedState& D) {
  const int n = D.th.grid.size();
  D.Wg.resize(n);
  for (int j = 0; j < n; ++j)
    D.Wg[j] = log_blend(D.u[j], D.th.eps[j], D.gamma, D.par.T);
  unwrap_along_grid(D.Wg);
}

// one sweep of the grid map u <- F(u) at frozen roots; returns sup residual
inline double grid_sweep(DeformedState& D, const Eigen::MatrixXd& Km, bool apply) {
  const int n = D.th.grid.size();
  const double T = D.par.T;
  refresh_blend(D);
  std::vector<cplx> rhs(n);
  if (D.par.c_inf) {
    for (int j = 0; j < n; ++j)
      rhs[j] = cplx(D.th.grid.x[j] * D.th.grid.x[j]) - D.par.h_alpha();
  } else {
    Eigen::Map<const Eigen::VectorXcd> Wm(D.Wg.data(), n);
    Eigen::VectorXcd conv = Km * Wm;
    for (int j = 0; j < n; ++j)
      rhs[j] = cplx(D.th.grid.x[j] * D.th.grid.x[j]) - D.par.h_alpha() - T * conv(j) +
               D.driving(cplx(D.th.grid.x[j]));
  }
  double r = 0;
  for (int j = 0; j < n; ++j) r = std::max(r, std::abs(rhs[j] - D.u[j]));
  if (apply) D.u = std::move(rhs);
  return r;
}

inline void check_roots_sane(const DeformedState& D) {
  for (size_t a = 0; a < D.roots.size(); ++a) {
    const auto& r = D.roots[a];
    require(r.s.imag() * r.key.half > 1e-3, ErrKind::root_left_strip,
            fmt("root (%c%d) collapsed onto the real axis: Im %g", r.key.side, r.key.m,
                r.s.imag()));
    if (!D.par.c_inf)
      require(std::abs(r.s.imag()) < D.par.strip(), ErrKind::root_left_strip,
              fmt("root escaped the strip: Im %g", r.s.imag()));
    for (size_t b = a + 1; b < D.roots.size(); ++b)
      require(std::abs(r.s - D.roots[b].s) > 1e-6, ErrKind::root_collision,
              "two selected roots collided");
  }
}

// alternate grid relaxation and root Newton until both residuals settle
inline bool joint_relax(DeformedState& D, const Eigen::MatrixXd& Km, const DeformOpts& opts) {
  double damping = 1.0;
  double prev = 1e300;
  for (int outer = 0; outer < opts.max_outer; ++outer) {
    // grid relaxation at frozen roots
    int inner_budget = D.par.c_inf ? 1 : 40;
    double gres = 0;
    for (int it = 0; it < inner_budget; ++it) {
      std::vector<cplx> save = D.u;
      gres = grid_sweep(D, Km, true);
      if (damping < 1.0)
        for (size_t j = 0; j < D.u.size(); ++j)
          D.u[j] = (1.0 - damping) * save[j] + damping * D.u[j];
      if (gres < 0.2 * opts.tol) break;
    }
    refresh_blend(D);

    // root refresh at frozen grid
    double rres = 0;
    for (auto& r : D.roots) {
      auto g = [&](cplx z) { return D.demand(z); };
      auto gp = [&](cplx z) { return D.demand_d(z); };
      SolverReport nr;
      cplx s = newton_root(g, gp, r.s, 0.2 * opts.tol, 40, 0.4, &nr);
      if (!nr.converged) return false;
      r.s = s;
      r.residual = nr.residual;
      rres = std::max(rres, nr.residual);
    }
    check_roots_sane(D);

    // joint residual: grid map residual re-evaluated with fresh roots
    gres = grid_sweep(D, Km, false);
    D.grid_residual = gres;
    D.root_residual = rres;
    D.report.iterations += 1;
    double total = gres + rres;
    if (total < opts.tol) {
      D.report.converged = true;
      D.report.residual = total;
      return true;
    }
    if (total > 1.3 * prev) {
      damping = std::max(0.125, 0.5 * damping);
    }
    prev = total;
  }
  return false;
}

}  // namespace detail

// Solve the deformed equation by walking gamma from 0 to 1.  The start is
// closed-form: u = eps - 2 pi i alpha T - driving(poles), roots = poles.
// Failed steps are bisected; below min_gamma_step the walk gives up.
inline DeformedState solve_deformed(const ThermalState& th, const PoleTable& poles,
                                    const RootSelection& sel, cplx alpha,
                                    const DeformOpts& opts = {}) {
  require(!sel.empty(), ErrKind::bad_input, "empty selection: use the leading-channel path");
  DeformedState D;
  D.par = th.par;
  D.par.alpha = alpha;
  D.th = th;
  D.sel = sel;
  D.gamma = 0;

  const int n = th.grid.size();
  Eigen::MatrixXd Km(0, 0);
  if (!th.par.c_inf) {
    Km.resize(n, n);
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        Km(j, k) = lieb_kernel(th.par, th.grid.x[j] - th.grid.x[k]) * th.grid.w[k] / (2.0 * pi);
  }

  auto add_root = [&](const PoleKey& k, int sign) {
    const PoleEntry* e = poles.find(k);
    require(e != nullptr, ErrKind::bad_input,
            fmt("selected pole (%c%d, half %+d) not in table", k.side, k.m, k.half));
    RootState r;
    r.key = k;
    r.sign = sign;
    r.s = e->root;
    D.roots.push_back(r);
  };
  for (const auto& k : sel.plus) add_root(k, +1);
  for (const auto& k : sel.minus) add_root(k, -1);

  // gamma = 0 closed form
  D.u.resize(n);
  for (int j = 0; j < n; ++j)
    D.u[j] = th.eps[j] - 2.0 * pi * iu * alpha * th.par.T + D.driving(cplx(th.grid.x[j]));
  detail::refresh_blend(D);

  double g_prev = 0;
  DeformedState good = D;
  double step = 1.0 / opts.gamma_steps;
  while (g_prev < 1.0 - 1e-14) {
    double g_next = std::min(1.0, g_prev + step);
    D = good;
    D.gamma = g_next;
    D.report = SolverReport{};
    bool ok = false;
    try {
      ok = detail::joint_relax(D, Km, opts);
    } catch (const Error& e) {
      if (e.kind() == ErrKind::root_left_strip || e.kind() == ErrKind::root_collision) throw;
      ok = false;
    }
    if (ok) {
      good = D;
      g_prev = g_next;
      continue;
    }
    step *= 0.5;
    require(step >= opts.min_gamma_step, ErrKind::no_convergence,
            fmt("homotopy stalled near gamma = %g", g_next));
  }
  return good;
}

// ---------------------------------------------------------------------------
// Contour through the selected roots.
//
// Each root gets a rectangular excursion ("lobe") off the real axis that
// encloses it and nothing else.  Upper roots are crossed by upward lobes,
// lower roots by downward ones; when an upper and a lower lobe overlap in x
// (conjugate pairs at alpha = 0) the two are fused into a two-lobe figure:
// lower loop first, a backward run along the axis, then the upper loop.  That
// ordering makes the deformation chain wind -1 around upper roots and +1
// around lower ones, the same as for disjoint lobes, so the unwrapped branch
// of log(1 + e^{-u/T}) gains +1 (upper) / -1 (lower) per crossing either way.

struct Lobe {
  double x0 = 0, x1 = 0;
  double y_up = 0, y_dn = 0;  // heights (magnitudes); zero means absent
  std::vector<int> members;   // indices into DeformedState::roots
  bool eight() const { return y_up > 0 && y_dn > 0; }
};

struct ContourPlan {
  Contour chat;
  std::vector<Lobe> lobes;
  std::vector<cplx> verts;       // polyline vertices, for derived contours
  std::vector<double> spac;      // per-segment node spacing used to build chat
  std::vector<cplx> logU, logE;  // branch-continuous logs at the nodes
  std::vector<cplx> z;           // -(1/2pi i)(logU - logE)
  cplx end_drift = 0;            // logU-logE drift over the whole path; ~0 when balanced
};

namespace detail {

// lateral clearance of a prospective lobe edge against excluded points
inline double lobe_halfwidth(cplx s, const std::vector<cplx>& excl, double reach) {
  double w = 0.6;
  for (cplx e : excl) {
    if (std::abs(e - s) < 1e-9) continue;
    if (std::abs(e.imag()) > reach + 0.2) continue;
    double gap = std::abs(e.real() - s.real());
    if (gap < 1e-3) continue;  // vertically stacked: height logic handles it
    w = std::min(w, 0.7 * gap);
  }
  return w;
}

}  // namespace detail

inline ContourPlan plan_contour(const DeformedState& D, const PoleTable& poles,
                                double audit_tol = 2e-3) {
  require(D.gamma == 1.0, ErrKind::bad_input, "contour planning needs the gamma = 1 state");
  const double T = D.par.T;
  const double L = D.th.grid.half_width;

  std::vector<cplx> excl;
  for (const auto& e : poles.entries) excl.push_back(e.root);

  // one proto-lobe per root
  std::vector<Lobe> lobes;
  for (size_t a = 0; a < D.roots.size(); ++a) {
    const cplx s = D.roots[a].s;
    double clr = 0.8;
    for (cplx e : excl)
      if (std::abs(e - s) > 1e-9) clr = std::min(clr, 0.5 * std::abs(e - s));
    for (size_t b = 0; b < D.roots.size(); ++b)
      if (b != a) clr = std::min(clr, 0.5 * std::abs(D.roots[b].s - s));
    clr = std::clamp(clr, 0.08, 0.8);
    double y = std::abs(s.imag()) + clr;
    if (!D.par.c_inf) {
      require(y < D.par.strip(), ErrKind::cannot_separate,
              fmt("lobe over root (%c%d) would leave the strip", D.roots[a].key.side,
                  D.roots[a].key.m));
    }
    double w = std::clamp(detail::lobe_halfwidth(s, excl, y), 0.03, 0.6);
    Lobe lb;
    lb.x0 = s.real() - w;
    lb.x1 = s.real() + w;
    if (D.roots[a].sign > 0)
      lb.y_up = y;
    else
      lb.y_dn = y;
    lb.members = {static_cast<int>(a)};
    lobes.push_back(lb);
  }

  // fuse overlapping lobes until stable
  bool merged = true;
  while (merged) {
    merged = false;
    for (size_t i = 0; i < lobes.size() && !merged; ++i)
      for (size_t j = i + 1; j < lobes.size() && !merged; ++j) {
        if (lobes[i].x1 + 0.02 < lobes[j].x0 || lobes[j].x1 + 0.02 < lobes[i].x0) continue;
        lobes[i].x0 = std::min(lobes[i].x0, lobes[j].x0);
        lobes[i].x1 = std::max(lobes[i].x1, lobes[j].x1);
        lobes[i].y_up = std::max(lobes[i].y_up, lobes[j].y_up);
        lobes[i].y_dn = std::max(lobes[i].y_dn, lobes[j].y_dn);
        lobes[i].members.insert(lobes[i].members.end(), lobes[j].members.begin(),
                                lobes[j].members.end());
        lobes.erase(lobes.begin() + j);
        merged = true;
      }
  }
  std::sort(lobes.begin(), lobes.end(), [](const Lobe& a, const Lobe& b) { return a.x0 < b.x0; });

  // no excluded singularity may sit inside a lobe region; a root sitting on
  // top of its parent pole (exact free-fermion point at alpha = 0) cannot be
  // separated at all
  for (const auto& r : D.roots)
    for (cplx e : excl)
      require(std::abs(e - r.s) > 5e-4, ErrKind::cannot_separate,
              "selected root degenerate with a Fermi-weight pole; "
              "use the closed-form branch for this parameter point");
  for (const auto& lb : lobes) {
    require(lb.x0 > -L + 0.5 && lb.x1 < L - 0.5, ErrKind::cannot_separate,
            "lobe reaches the grid edge; enlarge the grid");
    for (cplx e : excl) {
      bool inside_x = e.real() > lb.x0 - 0.01 && e.real() < lb.x1 + 0.01;
      bool inside_y = (e.imag() > 1e-9 && e.imag() < lb.y_up - 1e-9) ||
                      (e.imag() < -1e-9 && -e.imag() < lb.y_dn - 1e-9);
      require(!(inside_x && inside_y), ErrKind::cannot_separate,
              fmt("Fermi-weight pole at (%g,%g) sits inside a detour region", e.real(),
                  e.imag()));
    }
  }

  // assemble vertices with per-segment spacing
  std::vector<cplx> verts;
  std::vector<double> spac;
  // node spacing that reproduces the thermal grid's panel width on the axis
  const double s_axis = std::clamp(D.th.grid.panel_width() / D.th.grid.order, 0.05, 0.2);
  auto push = [&](cplx v, double sp) {
    verts.push_back(v);
    spac.push_back(sp);  // spacing of the segment leaving this vertex
  };
  push(cplx(-L, 0), s_axis);
  for (const auto& lb : lobes) {
    double clr_min = 0.8;
    for (int a : lb.members) {
      const cplx s = D.roots[a].s;
      double edge = std::min({std::abs(s.real() - lb.x0), std::abs(lb.x1 - s.real()),
                              (lb.y_up > 0 && s.imag() > 0) ? lb.y_up - s.imag() : 1e9,
                              (lb.y_dn > 0 && s.imag() < 0) ? lb.y_dn + s.imag() : 1e9});
      clr_min = std::min(clr_min, edge);
    }
    // panel width ~ 1.5x the edge clearance keeps the Bernstein factor ~3
    double s_lobe = std::clamp(clr_min / 8.0, 0.004, 0.1);
    if (lb.eight()) {
      push(cplx(lb.x0, 0), s_lobe);
      push(cplx(lb.x0, -lb.y_dn), s_lobe);
      push(cplx(lb.x1, -lb.y_dn), s_lobe);
      push(cplx(lb.x1, 0), s_lobe);  // backward run along the axis
      push(cplx(lb.x0, 0), s_lobe);
      push(cplx(lb.x0, lb.y_up), s_lobe);
      push(cplx(lb.x1, lb.y_up), s_lobe);
      push(cplx(lb.x1, 0), s_axis);
    } else {
      double y = lb.y_up > 0 ? lb.y_up : -lb.y_dn;
      push(cplx(lb.x0, 0), s_lobe);
      push(cplx(lb.x0, y), s_lobe);
      push(cplx(lb.x1, y), s_lobe);
      push(cplx(lb.x1, 0), s_axis);
    }
  }
  push(cplx(L, 0), s_axis);
  spac.pop_back();  // spacings pair with segments, one fewer than vertices

  ContourPlan plan;
  plan.lobes = lobes;
  plan.verts = verts;
  plan.spac = spac;
  plan.chat = make_contour(verts, D.th.grid.order, spac);

  auto fu = [&](cplx zz) { return 1.0 + std::exp(-D.u_at(zz) / T); };
  auto fe = [&](cplx zz) { return 1.0 + std::exp(-D.th.eps_at(zz) / T); };
  UnwrapResult Ru = unwrapped_log(plan.chat, fu);
  UnwrapResult Re_ = unwrapped_log(plan.chat, fe);
  plan.logU = std::move(Ru.log_vals);
  plan.logE = std::move(Re_.log_vals);
  plan.z.resize(plan.chat.size());
  for (int k = 0; k < plan.chat.size(); ++k)
    plan.z[k] = -(plan.logU[k] - plan.logE[k]) / (2.0 * pi * iu);
  plan.end_drift = (Ru.end_log - Ru.start_log) - (Re_.end_log - Re_.start_log);
  require(std::abs(plan.end_drift) < 1e-6, ErrKind::branch_jump,
          fmt("unbalanced winding along the contour: drift %g", std::abs(plan.end_drift)));

  // argument-principle audit: each lobe half must hold exactly its selected
  // roots and no Fermi-weight pole
  auto fu_d = [&](cplx zz) { return -D.u_d_at(zz) / T * std::exp(-D.u_at(zz) / T); };
  auto fe_d = [&](cplx zz) { return -D.th.eps_d_at(zz) / T * std::exp(-D.th.eps_at(zz) / T); };
  for (const auto& lb : lobes) {
    for (int pass = 0; pass < 2; ++pass) {
      double ylo = pass == 0 ? 1e-4 : -lb.y_dn;
      double yhi = pass == 0 ? lb.y_up : -1e-4;
      if ((pass == 0 && lb.y_up <= 0) || (pass == 1 && lb.y_dn <= 0)) continue;
      int want = 0;
      for (int a : lb.members)
        if ((pass == 0) == (D.roots[a].sign > 0)) ++want;
      int got = count_zeros(fu, fu_d, lb.x0, lb.x1, ylo, yhi, audit_tol);
      require(got == want, ErrKind::ambiguous_count,
              fmt("detour audit: found %d subsidiary roots, expected %d", got, want));
      int eps_zeros = count_zeros(fe, fe_d, lb.x0, lb.x1, ylo, yhi, audit_tol);
      require(eps_zeros == 0, ErrKind::ambiguous_count,
              fmt("detour audit: %d Fermi-weight poles crossed", eps_zeros));
    }
  }
  return plan;
}

// Re-converge at gamma = 1 from a previous solution (parameter continuation
// along a sweep).  Falls back to the full homotopy on failure.
inline DeformedState solve_deformed_warm(const ThermalState& th, const PoleTable& poles,
                                         const RootSelection& sel, cplx alpha,
                                         const DeformedState& prev, const DeformOpts& opts = {}) {
  DeformedState D;
  D.par = th.par;
  D.par.alpha = alpha;
  D.th = th;
  D.sel = sel;
  D.gamma = 1.0;
  D.roots = prev.roots;
  const int n = th.grid.size();
  if (static_cast<int>(prev.u.size()) == n) {
    D.u = prev.u;
  } else {
    D.u.resize(n);
    for (int j = 0; j < n; ++j) D.u[j] = th.eps[j] - 2.0 * pi * iu * alpha * th.par.T;
  }
  detail::refresh_blend(D);
  Eigen::MatrixXd Km(0, 0);
  if (!th.par.c_inf) {
    Km.resize(n, n);
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        Km(j, k) = lieb_kernel(th.par, th.grid.x[j] - th.grid.x[k]) * th.grid.w[k] / (2.0 * pi);
  }
  bool ok = false;
  try {
    ok = detail::joint_relax(D, Km, opts);
  } catch (const Error&) {
    ok = false;
  }
  if (ok) return D;
  return solve_deformed(th, poles, sel, alpha, opts);
}

}  // namespace qnls

#endif
