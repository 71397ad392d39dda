#include <gtest/gtest.h>

#include "qnls/deformed.hpp"

using namespace qnls;

namespace {

ModelParams ff_params(double h, double T, cplx alpha) {
  ModelParams p;
  p.c = 1e12;
  p.c_inf = true;
  p.h = h;
  p.T = T;
  p.alpha = alpha;
  return p;
}

ModelParams gas_params(double c, double h, double T, cplx alpha) {
  ModelParams p;
  p.c = c;
  p.h = h;
  p.T = T;
  p.alpha = alpha;
  return p;
}

}  // namespace

TEST(Selection, ParsesPairLists) {
  RootSelection s = parse_selection("+R0;-R0");
  ASSERT_EQ(s.plus.size(), 1u);
  ASSERT_EQ(s.minus.size(), 1u);
  EXPECT_EQ(s.plus[0].half, +1);
  EXPECT_EQ(s.plus[0].side, 'R');
  EXPECT_EQ(s.plus[0].m, 0);
  EXPECT_EQ(s.minus[0].half, -1);
  EXPECT_EQ(s.pairs(), 1u);

  s = parse_selection(" +R0, +R1 ; -R0, -L1 ");
  ASSERT_EQ(s.pairs(), 2u);
  EXPECT_EQ(s.plus[1].m, 1);
  EXPECT_EQ(s.minus[1].side, 'L');
  EXPECT_EQ(s.minus[1].m, 1);
}

TEST(Selection, RejectsMalformedInput) {
  auto kind_of = [](const std::string& text) {
    try {
      parse_selection(text);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrKind::io_error;  // sentinel: no throw
  };
  EXPECT_EQ(kind_of("+R0;"), ErrKind::bad_input);         // unbalanced
  EXPECT_EQ(kind_of("+R0,+R1;-R0"), ErrKind::bad_input);  // unbalanced
  EXPECT_EQ(kind_of("-R0;+R0"), ErrKind::bad_input);      // sides swapped
  EXPECT_EQ(kind_of("+X0;-R0"), ErrKind::bad_input);      // bad branch letter
  EXPECT_EQ(kind_of("+R;-R0"), ErrKind::bad_input);       // missing level
  EXPECT_EQ(kind_of("+R1x;-R0"), ErrKind::bad_input);     // trailing junk
  EXPECT_EQ(kind_of("+R0,+R0;-R0,-L0"), ErrKind::bad_input);  // duplicate
}

// At c = infinity the homotopy endpoint is known in closed form: the root
// demand 1 + e^{-(s^2-h_alpha)/T} = 0 puts the level-m roots on the lattice
// s^2 = h_alpha + i pi T (2m+1).
TEST(Deformed, FreeFermionRootsLandOnTwistedLattice) {
  ModelParams par = ff_params(1.0, 1.0, cplx(0.1, 0.0));
  ThermalState th = solve_thermal(par, par.h);
  PoleTable poles = locate_poles(th, 1);
  RootSelection sel = parse_selection("+R0;-R0");

  DeformedState D = solve_deformed(th, poles, sel, par.alpha);
  EXPECT_TRUE(D.report.converged);
  EXPECT_EQ(D.gamma, 1.0);

  cplx ha = par.h_alpha();
  cplx sp = std::sqrt(ha + iu * pi * par.T);
  cplx sm = std::sqrt(ha - iu * pi * par.T);
  EXPECT_LT(std::abs(D.roots[0].s - sp), 1e-10);
  EXPECT_LT(std::abs(D.roots[1].s - sm), 1e-10);

  for (int j = 0; j < th.grid.size(); ++j) {
    cplx x(th.grid.x[j]);
    EXPECT_LT(std::abs(D.u[j] - (x * x - ha)), 1e-10);
  }
}

// The planned contour must reproduce the rate computed from the pressure
// difference plus the root crossing term.  Frozen anchor computed from
// p0 - i(s+ - s-) with P evaluated by adaptive quadrature.
TEST(Deformed, FreeFermionContourRateMatchesClosedForm) {
  ModelParams par = ff_params(1.0, 1.0, cplx(0.1, 0.0));
  ThermalState th = solve_thermal(par, par.h);
  PoleTable poles = locate_poles(th, 1);
  DeformedState D = solve_deformed(th, poles, parse_selection("+R0;-R0"), par.alpha);

  ContourPlan plan = plan_contour(D, poles);
  ASSERT_EQ(plan.lobes.size(), 2u);
  EXPECT_FALSE(plan.lobes[0].eight());
  EXPECT_FALSE(plan.lobes[1].eight());
  EXPECT_LT(std::abs(plan.end_drift), 1e-8);

  cplx p_contour = iu * contour_sum(plan.chat, plan.z);

  ThermalState th_tw = solve_thermal(par, par.h_alpha());
  cplx p0 = (th.pressure - th_tw.pressure) / par.T;
  cplx p_expected = p0 - iu * (D.roots[0].s - D.roots[1].s);
  EXPECT_LT(std::abs(p_contour - p_expected), 1e-8);
  EXPECT_LT(std::abs(p_contour - cplx(2.15251022248344, -0.38617593207881)), 1e-6);
}

// At alpha = 0 and c = infinity the roots coincide with the Fermi-weight
// poles exactly; no contour can separate them and the planner must say so.
TEST(Deformed, FreeFermionZeroTwistCannotBeSeparated) {
  ModelParams par = ff_params(1.0, 1.0, cplx(0.0, 0.0));
  ThermalState th = solve_thermal(par, par.h);
  PoleTable poles = locate_poles(th, 1);
  DeformedState D = solve_deformed(th, poles, parse_selection("+R0;-R0"), par.alpha);
  EXPECT_LT(std::abs(D.roots[0].s - poles.find({+1, 'R', 0})->root), 1e-12);
  try {
    plan_contour(D, poles);
    FAIL() << "expected cannot_separate";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrKind::cannot_separate);
  }
}

TEST(Deformed, InteractingPairConverges) {
  ModelParams par = gas_params(10.0, 4.0, 2.0, cplx(0.0, 0.0));
  ThermalState th = solve_thermal(par, par.h);
  PoleTable poles = locate_poles(th, 2);
  DeformedState D = solve_deformed(th, poles, parse_selection("+R0;-R0"), par.alpha);

  EXPECT_TRUE(D.report.converged);
  EXPECT_LT(D.grid_residual + D.root_residual, 1e-11);

  // real equation at alpha = 0: conjugate-symmetric roots, real u on the axis
  EXPECT_LT(std::abs(D.roots[1].s - std::conj(D.roots[0].s)), 1e-9);
  EXPECT_GT(D.roots[0].s.imag(), 0.0);
  double im_u = 0;
  for (const cplx& v : D.u) im_u = std::max(im_u, std::abs(v.imag()));
  EXPECT_LT(im_u, 1e-9);

  // cross-check against an independent relaxation on a denser trapezoid grid
  EXPECT_LT(std::abs(D.roots[0].s - cplx(2.26559242, 1.38210813)), 1e-4);
}

TEST(Deformed, InteractingPlanFusesConjugateLobes) {
  ModelParams par = gas_params(10.0, 4.0, 2.0, cplx(0.0, 0.0));
  ThermalState th = solve_thermal(par, par.h);
  PoleTable poles = locate_poles(th, 2);
  DeformedState D = solve_deformed(th, poles, parse_selection("+R0;-R0"), par.alpha);

  ContourPlan plan = plan_contour(D, poles);
  ASSERT_EQ(plan.lobes.size(), 1u);
  EXPECT_TRUE(plan.lobes[0].eight());
  EXPECT_LT(std::abs(plan.end_drift), 1e-8);

  // z is purely imaginary on the leading and trailing axis stretches
  for (int k = 0; k < plan.chat.size(); ++k) {
    cplx l = plan.chat.x[k];
    if (l.imag() == 0.0 && (l.real() < plan.lobes[0].x0 - 0.1 || l.real() > plan.lobes[0].x1 + 0.1)) {
      EXPECT_LT(std::abs(plan.z[k].real()), 1e-8);
    }
  }

  cplx p = iu * contour_sum(plan.chat, plan.z);
  EXPECT_LT(std::abs(p.imag()), 1e-6);
  EXPECT_GT(p.real(), 0.0);
  EXPECT_LT(std::abs(p - cplx(3.1016824, 0.0)), 5e-4);
}

TEST(Deformed, WarmRestartMatchesColdSolve) {
  ModelParams par = gas_params(10.0, 4.0, 2.0, cplx(0.0, 0.0));
  ThermalState th = solve_thermal(par, par.h);
  PoleTable poles = locate_poles(th, 2);
  RootSelection sel = parse_selection("+R0;-R0");
  DeformedState D0 = solve_deformed(th, poles, sel, par.alpha);

  cplx a1(0.05, 0.0);
  DeformedState Dw = solve_deformed_warm(th, poles, sel, a1, D0);
  DeformedState Dc = solve_deformed(th, poles, sel, a1);
  EXPECT_TRUE(Dw.report.converged);
  EXPECT_LT(std::abs(Dw.roots[0].s - Dc.roots[0].s), 1e-9);
  EXPECT_LT(std::abs(Dw.roots[1].s - Dc.roots[1].s), 1e-9);
  double du = 0;
  for (size_t j = 0; j < Dw.u.size(); ++j) du = std::max(du, std::abs(Dw.u[j] - Dc.u[j]));
  EXPECT_LT(du, 1e-8);
}

TEST(Deformed, SelectionOutsideTableRejected) {
  ModelParams par = gas_params(10.0, 4.0, 2.0, cplx(0.0, 0.0));
  ThermalState th = solve_thermal(par, par.h);
  PoleTable poles = locate_poles(th, 2);
  try {
    solve_deformed(th, poles, parse_selection("+R5;-R5"), par.alpha);
    FAIL() << "expected bad_input";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrKind::bad_input);
  }
}
