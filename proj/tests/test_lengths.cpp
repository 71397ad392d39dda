#include <gtest/gtest.h>

#include "qnls/lengths.hpp"

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

TEST(LeadingRate, VanishesAtZeroTwist) {
  ModelParams par = gas_params(10.0, 4.0, 2.0, cplx(0.0, 0.0));
  ThermalState th = solve_thermal(par, par.h);
  ThermalState tw = solve_thermal(par, par.h_alpha());
  EXPECT_LT(std::abs(leading_rate(th, tw)), 1e-12);
}

// Anchor from adaptive quadrature of the free-fermion pressures.
TEST(LeadingRate, FreeFermionAnchor) {
  ModelParams par = ff_params(1.0, 1.0, cplx(0.1, 0.0));
  ThermalState th = solve_thermal(par, par.h);
  ThermalState tw = solve_thermal(par, par.h_alpha());
  cplx p0 = leading_rate(th, tw);
  EXPECT_LT(std::abs(p0 - cplx(0.02500607070838, -0.18193220326858)), 1e-8);
}

TEST(LeadingRate, SlopeMatchesDensity) {
  ModelParams par = gas_params(10.0, 4.0, 2.0, cplx(0.0, 0.0));
  ThermalState th = solve_thermal(par, par.h);
  cplx slope = leading_rate_slope(par);
  cplx want = -2.0 * pi * iu * th.density;
  EXPECT_LT(std::abs(slope - want) / std::abs(want), 1e-6);
}

TEST(ChannelRate, FormsAgreeFreeFermion) {
  ModelParams par = ff_params(1.0, 1.0, cplx(0.1, 0.0));
  ThermalState th = solve_thermal(par, par.h);
  PoleTable poles = locate_poles(th, 1);
  DeformedState D = solve_deformed(th, poles, parse_selection("+R0;-R0"), par.alpha);
  ContourPlan plan = plan_contour(D, poles);
  RateResult r = channel_rate(D, plan);
  EXPECT_LT(r.spread, 1e-8);
  EXPECT_LT(std::abs(r.p - cplx(2.15251022248344, -0.38617593207881)), 1e-7);
}

TEST(ChannelRate, FormsAgreeInteracting) {
  ModelParams par = gas_params(10.0, 4.0, 2.0, cplx(0.0, 0.0));
  ThermalState th = solve_thermal(par, par.h);
  PoleTable poles = locate_poles(th, 2);
  DeformedState D = solve_deformed(th, poles, parse_selection("+R0;-R0"), par.alpha);
  ContourPlan plan = plan_contour(D, poles);
  RateResult r = channel_rate(D, plan);
  EXPECT_LT(r.spread, 1e-7);
  EXPECT_LT(std::abs(r.p.imag()), 1e-8);
  EXPECT_GT(r.p.real(), 0.0);
  EXPECT_LT(std::abs(r.p - cplx(3.1016824, 0.0)), 5e-4);
}

// Path independence of the homotopy endpoint and grid convergence of the
// rate: refining either must not move p.
TEST(ChannelRate, StableUnderRefinement) {
  ModelParams par = gas_params(10.0, 4.0, 2.0, cplx(0.0, 0.0));
  ThermalState th = solve_thermal(par, par.h);
  PoleTable poles = locate_poles(th, 2);
  RootSelection sel = parse_selection("+R0;-R0");

  DeformedState D = solve_deformed(th, poles, sel, par.alpha);
  cplx p = channel_rate(D, plan_contour(D, poles)).p;

  DeformOpts fine;
  fine.gamma_steps = 16;
  DeformedState Dg = solve_deformed(th, poles, sel, par.alpha, fine);
  cplx pg = channel_rate(Dg, plan_contour(Dg, poles)).p;
  EXPECT_LT(std::abs(pg - p), 1e-9);

  GridSpec gs;
  gs.half_width = th.grid.half_width;
  gs.panels = th.grid.panels * 3 / 2;
  ThermalState th2 = solve_thermal(par, par.h, gs);
  PoleTable poles2 = locate_poles(th2, 2);
  DeformedState D2 = solve_deformed(th2, poles2, sel, par.alpha);
  cplx p2 = channel_rate(D2, plan_contour(D2, poles2)).p;
  EXPECT_LT(std::abs(p2 - p), 1e-6);
}

// Two-pair selection at c = infinity: lattice closed form for the crossing
// term, pressure difference for the rest.
TEST(ChannelRate, MultiPairClosedFormFreeFermion) {
  ModelParams par = ff_params(1.0, 1.0, cplx(0.25, 0.0));
  ThermalState th = solve_thermal(par, par.h);
  PoleTable poles = locate_poles(th, 2);
  DeformedState D = solve_deformed(th, poles, parse_selection("+R0,+R1;-R0,-R1"), par.alpha);
  ContourPlan plan = plan_contour(D, poles);
  ASSERT_EQ(plan.lobes.size(), 4u);

  RateResult r = channel_rate(D, plan);
  EXPECT_LT(r.spread, 1e-8);

  ThermalState tw = solve_thermal(par, par.h_alpha());
  cplx ha = par.h_alpha();
  cplx cross = std::sqrt(ha + iu * pi) + std::sqrt(ha + 3.0 * iu * pi) -
               std::sqrt(ha - iu * pi) - std::sqrt(ha - 3.0 * iu * pi);
  cplx want = leading_rate(th, tw) - iu * cross;
  EXPECT_LT(std::abs(r.p - want), 1e-8);
}
