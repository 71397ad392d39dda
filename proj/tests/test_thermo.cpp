#include <gtest/gtest.h>

#include "qnls/thermo.hpp"

using namespace qnls;

#define EXPECT_CNEAR(a, b, tol) EXPECT_LT(std::abs((a) - (b)), tol)

namespace {

ModelParams ff_params(double h, double T) {
  ModelParams m;
  m.c_inf = true;
  m.c = 0;
  m.h = h;
  m.T = T;
  return m;
}

// independent pressure quadrature for the free gas, trapezoid on a fine grid
double ff_pressure(double h, double T) {
  double L = std::sqrt(std::abs(h) + 45.0 * T);
  int n = 200000;
  double s = 0, dl = 2.0 * L / n;
  for (int j = 0; j <= n; ++j) {
    double l = -L + j * dl;
    double f = std::log1p(std::exp(-(l * l - h) / T));
    s += (j == 0 || j == n) ? 0.5 * f : f;
  }
  return T / (2.0 * pi) * s * dl;
}

}  // namespace

TEST(ThermoFF, ExactDispersion) {
  ThermalState st = solve_thermal(ff_params(1.0, 1.0), 1.0);
  for (int j = 0; j < st.grid.size(); ++j) {
    double l = st.grid.x[j];
    EXPECT_CNEAR(st.eps[j], cplx(l * l - 1.0), 1e-15);
  }
  // Fermi weight at the band bottom: 1/(1 + e^{-1})
  EXPECT_CNEAR(st.fermi_at(0.0), cplx(0.73105857863000490), 1e-14);
  EXPECT_CNEAR(st.rho_t_at(0.7), cplx(1.0 / (2.0 * pi)), 1e-16);
}

TEST(ThermoFF, PressureMatchesIndependentQuadrature) {
  ThermalState st = solve_thermal(ff_params(1.0, 1.0), 1.0);
  EXPECT_NEAR(st.pressure.real(), ff_pressure(1.0, 1.0), 1e-10);
  EXPECT_NEAR(st.pressure.imag(), 0.0, 1e-14);
  ThermalState st2 = solve_thermal(ff_params(4.0, 2.0), 4.0);
  EXPECT_NEAR(st2.pressure.real(), ff_pressure(4.0, 2.0), 1e-9);
}

TEST(Thermo, InteractingSolveSelfConsistent) {
  ModelParams m;
  m.c = 4.0;
  m.h = 2.0;
  m.T = 1.0;
  ThermalState st = solve_thermal(m, m.h);
  EXPECT_TRUE(st.report.converged);
  EXPECT_LT(st.report.residual, 1e-12);
  // evenness in lambda
  int n = st.grid.size();
  for (int j = 0; j < n / 2; ++j) EXPECT_CNEAR(st.eps[j], st.eps[n - 1 - j], 1e-11);
  EXPECT_LT(st.eps[n / 2].real(), 0.0);  // Fermi sea at the origin
  EXPECT_GT(st.pressure.real(), 0.0);
  EXPECT_GT(st.density.real(), 0.0);
  EXPECT_NEAR(st.density.imag(), 0.0, 1e-13);

  // grid-doubling stability
  GridSpec fine;
  fine.panels = 2 * st.grid.panels;
  ThermalState st2 = solve_thermal(m, m.h, fine);
  EXPECT_CNEAR(st.pressure, st2.pressure, 1e-11);
  EXPECT_CNEAR(st.density, st2.density, 5e-10);
  EXPECT_CNEAR(st.eps_at(cplx(1.3, 2.1)), st2.eps_at(cplx(1.3, 2.1)), 1e-10);
}

TEST(Thermo, FermionizedLimitBoundsPressure) {
  // the convolution term lowers eps, so P decreases monotonically with c
  // toward the free-fermion value
  ModelParams m;
  m.h = 2.0;
  m.T = 1.0;
  m.c = 4.0;
  double p4 = solve_thermal(m, m.h).pressure.real();
  m.c = 40.0;
  double p40 = solve_thermal(m, m.h).pressure.real();
  double p_ff = solve_thermal(ff_params(2.0, 1.0), 2.0).pressure.real();
  EXPECT_GT(p4, p40);
  EXPECT_GT(p40, p_ff);
  EXPECT_LT(p40 - p_ff, 0.1 * (p4 - p_ff));
}

TEST(Thermo, ComplexPotentialConjugateSymmetry) {
  ModelParams m;
  m.c = 10.0;
  m.h = 4.0;
  m.T = 2.0;
  m.alpha = 0.1;
  cplx mu = m.h_alpha();
  ThermalState a = solve_thermal(m, mu);
  ModelParams mc = m;
  mc.alpha = -0.1;
  ThermalState b = solve_thermal(mc, mc.h_alpha());
  EXPECT_CNEAR(a.pressure, std::conj(b.pressure), 1e-11);
  EXPECT_CNEAR(a.density, std::conj(b.density), 1e-11);
}

TEST(Thermo, ContinuationDerivativeConsistent) {
  ModelParams m;
  m.c = 10.0;
  m.h = 4.0;
  m.T = 2.0;
  ThermalState st = solve_thermal(m, m.h);
  cplx z(1.7, 1.1);
  double d = 1e-5;
  cplx fd = (st.eps_at(z + d) - st.eps_at(z - d)) / (2.0 * d);
  EXPECT_CNEAR(st.eps_d_at(z), fd, 1e-8);
  // strip guard
  EXPECT_THROW(st.eps_at(cplx(0, 9.5)), Error);
}

TEST(Thermo, RhoCountingIdentity) {
  // 2 pi rho_t = 1 + K theta rho_t convolution: check the solved values
  // satisfy the equation pointwise through the continuation form.
  ModelParams m;
  m.c = 4.0;
  m.h = 2.0;
  m.T = 1.0;
  ThermalState st = solve_thermal(m, m.h);
  for (int j = 0; j < st.grid.size(); j += 17)
    EXPECT_CNEAR(st.rho_t_at(cplx(st.grid.x[j])), st.rho_t[j], 1e-11);
  EXPECT_GT(st.rho_t[st.grid.size() / 2].real(), 1.0 / (2.0 * pi));
}
