#include <gtest/gtest.h>

#include "qnls/poles.hpp"

using namespace qnls;

#define EXPECT_CNEAR(a, b, tol) EXPECT_LT(std::abs((a) - (b)), tol)

TEST(PolesFF, SeedsAreExactRoots) {
  ModelParams m;
  m.c_inf = true;
  m.h = 1.0;
  m.T = 1.0;
  m.alpha = 0.1;
  cplx mu = m.h_alpha();
  ThermalState st = solve_thermal(m, mu);
  // sqrt(1 + i pi) for the first upper-right pole at alpha = 0
  ModelParams m0 = m;
  m0.alpha = 0.0;
  ThermalState st0 = solve_thermal(m0, cplx(m0.h));
  PoleEntry e0 = locate_pole(st0, {+1, 'R', 0});
  EXPECT_CNEAR(e0.root, cplx(1.4657606062170614, 1.0716595330317402), 1e-12);

  PoleTable t = locate_poles(st, 3);
  EXPECT_EQ(t.entries.size(), 16u);
  for (const auto& e : t.entries) {
    EXPECT_LT(e.residual, 1e-12);
    EXPECT_CNEAR(e.root, e.seed, 1e-13);
    EXPECT_GT(e.root.imag() * e.key.half, 0.0);
    double sgn = (e.key.side == 'R') ? 1.0 : -1.0;
    EXPECT_GT(e.root.real() * sgn, 0.0);
    EXPECT_CNEAR(e.theta_reg, -m.T / (2.0 * e.root), 1e-12);
  }
}

TEST(Poles, InteractingRefinement) {
  ModelParams m;
  m.c = 10.0;
  m.h = 4.0;
  m.T = 2.0;
  ThermalState st = solve_thermal(m, m.h);
  PoleTable t = locate_poles(st, 2);
  for (const auto& e : t.entries) {
    EXPECT_LT(e.residual, 1e-10);
    // interaction shifts the root off the seed but not far
    EXPECT_LT(std::abs(e.root - e.seed), 0.6);
    EXPECT_GT(std::abs(e.root - e.seed), 1e-4);
    // residue factor against a finite difference of eps
    cplx d = 1e-6;
    cplx fd = (st.eps_at(e.root + d) - st.eps_at(e.root - d)) / (2.0 * d);
    EXPECT_CNEAR(e.theta_reg, -m.T / fd, 1e-6);
  }
  // conjugate symmetry at real potential
  const PoleEntry* up = t.find({+1, 'R', 0});
  const PoleEntry* dn = t.find({-1, 'R', 0});
  ASSERT_TRUE(up && dn);
  EXPECT_CNEAR(up->root, std::conj(dn->root), 1e-10);
}

TEST(Poles, CountMatchesArgumentPrinciple) {
  ModelParams m;
  m.c = 10.0;
  m.h = 4.0;
  m.T = 2.0;
  ThermalState st = solve_thermal(m, m.h);
  PoleTable t = locate_poles(st, 3);
  // upper-right window sized to exclude the first level beyond the table
  // (m = 4 sits near Im 5.1)
  double x0 = 0.05, x1 = 6.0, y0 = 0.05, y1 = 4.75;
  int expected = 0;
  for (const auto& e : t.entries) {
    cplx r = e.root;
    if (r.real() > x0 && r.real() < x1 && r.imag() > y0 && r.imag() < y1) ++expected;
  }
  EXPECT_GE(expected, 3);
  EXPECT_EQ(pole_count_in(st, x0, x1, y0, y1), expected);
}

TEST(Poles, StripCapSkipsDeepLevels) {
  ModelParams m;
  m.c = 4.0;  // strip 3.6: only low levels fit
  m.h = 4.0;
  m.T = 2.0;
  ThermalState st = solve_thermal(m, m.h);
  PoleTable t = locate_poles(st, 6);
  for (const auto& e : t.entries) EXPECT_LT(std::abs(e.root.imag()), 3.6);
  EXPECT_LT(t.entries.size(), 28u);
  EXPECT_GE(t.entries.size(), 4u);
}
