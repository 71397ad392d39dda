#ifndef QNLS_THERMO_HPP
#define QNLS_THERMO_HPP

#include <Eigen/Dense>

#include "qnls/model.hpp"
#include "qnls/nystrom.hpp"
#include "qnls/quadrature.hpp"
#include "qnls/solvers.hpp"

namespace qnls {

// Grid defaults: half-width so the Boltzmann tail is ~e^{-40}, panel width
// tied to the Fermi-edge scale T / (2 sqrt h) so low temperatures get finer
// panels automatically.
struct GridSpec {
  double half_width = 0;  // 0: auto
  int panels = 0;         // 0: auto
  int order = 12;

  QuadGrid resolve(const ModelParams& m) const {
    double L = half_width;
    if (L <= 0) L = std::ceil(std::sqrt(std::abs(m.h) + 40.0 * m.T + 2.0 * pi * m.T * std::abs(m.alpha)));
    int np = panels;
    if (np <= 0) {
      double edge = std::min(1.0, pi * m.T / (2.0 * std::sqrt(std::max(std::abs(m.h), 1.0))));
      double width = std::clamp(1.6 * edge, 0.4, 2.0);
      np = std::max(8, static_cast<int>(std::ceil(2.0 * L / width)));
    }
    return make_grid(L, np, order);
  }
};

// Solution of the thermal nonlinear integral equation at potential mu
// (mu = h, or h + 2 pi i alpha T for the twisted chain):
//   eps(l) = l^2 - mu - (T/2pi) int K(l-m) log(1 + e^{-eps(m)/T}) dm.
// W stores log(1 + e^{-eps/T}) branch-continuous along the grid.
struct ThermalState {
  ModelParams par;
  cplx mu = 0;
  QuadGrid grid;
  std::vector<cplx> eps, W, theta;  // theta = Fermi weight 1/(1+e^{eps/T})
  std::vector<cplx> rho_t, rho_p;
  cplx pressure = 0;
  cplx density = 0;
  SolverReport report;

  cplx eps_at(cplx l) const;
  cplx eps_d_at(cplx l) const;
  cplx eps_dd_at(cplx l) const;
  cplx fermi_at(cplx l) const { return fermi_of(eps_at(l) / par.T); }
  cplx rho_t_at(cplx l) const;
};

namespace detail {

inline void unwrap_along_grid(std::vector<cplx>& v) {
  for (size_t j = 1; j < v.size(); ++j) {
    double d = v[j].imag() - v[j - 1].imag();
    double k = std::round(d / (2.0 * pi));
    if (k != 0) v[j] -= cplx(0, 2.0 * pi * k);
  }
}

}  // namespace detail

inline ThermalState solve_thermal(const ModelParams& par, cplx mu, const GridSpec& gs = {},
                                  double tol = 1e-12, int max_iter = 2000) {
  par.validate();
  ThermalState st;
  st.par = par;
  st.mu = mu;
  st.grid = gs.resolve(par);
  const int n = st.grid.size();
  const double T = par.T;

  st.eps.resize(n);
  for (int j = 0; j < n; ++j) st.eps[j] = cplx(st.grid.x[j] * st.grid.x[j]) - mu;

  if (par.c_inf) {
    st.report.converged = true;
  } else {
    Eigen::MatrixXd Km(n, n);
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        Km(j, k) = lieb_kernel(par, st.grid.x[j] - st.grid.x[k]) * st.grid.w[k] / (2.0 * pi);

    std::vector<cplx> Wv(n);
    auto F = [&](const std::vector<cplx>& e, std::vector<cplx>& out) {
      for (int j = 0; j < n; ++j) Wv[j] = log1pexp(-e[j] / T);
      detail::unwrap_along_grid(Wv);
      Eigen::Map<const Eigen::VectorXcd> Wm(Wv.data(), n);
      Eigen::VectorXcd conv = Km * Wm;
      for (int j = 0; j < n; ++j)
        out[j] = cplx(st.grid.x[j] * st.grid.x[j]) - mu - T * conv(j);
    };
    st.report = fixed_point(st.eps, F, tol, max_iter);
    if (!st.report.converged)
      fail(ErrKind::no_convergence,
           fmt("thermal iteration stalled: residual %g after %d iterations", st.report.residual,
               st.report.iterations));
  }

  st.W.resize(n);
  st.theta.resize(n);
  for (int j = 0; j < n; ++j) {
    st.W[j] = log1pexp(-st.eps[j] / T);
    st.theta[j] = fermi_of(st.eps[j] / T);
  }
  detail::unwrap_along_grid(st.W);

  st.pressure = 0;
  for (int j = 0; j < n; ++j) st.pressure += st.grid.w[j] * st.W[j];
  st.pressure *= T / (2.0 * pi);

  // total density of states: (I - (1/2pi) K theta) rho_t = 1/2pi
  st.rho_t.assign(n, cplx(1.0 / (2.0 * pi)));
  if (!par.c_inf) {
    Eigen::MatrixXcd M(n, n);
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        M(j, k) = (j == k ? 1.0 : 0.0) -
                  lieb_kernel(par, st.grid.x[j] - st.grid.x[k]) * st.theta[k] * st.grid.w[k] /
                      (2.0 * pi);
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Constant(n, cplx(1.0 / (2.0 * pi)));
    Eigen::VectorXcd r = M.partialPivLu().solve(rhs);
    for (int j = 0; j < n; ++j) st.rho_t[j] = r(j);
  }
  st.rho_p.resize(n);
  st.density = 0;
  for (int j = 0; j < n; ++j) {
    st.rho_p[j] = st.theta[j] * st.rho_t[j];
    st.density += st.grid.w[j] * st.rho_p[j];
  }
  return st;
}

// Analytic continuation off the real axis through the solved convolution;
// valid in the strip |Im l| < 0.9 c.
inline cplx ThermalState::eps_at(cplx l) const {
  cplx v = l * l - mu;
  if (par.c_inf) return v;
  require(std::abs(l.imag()) < par.strip(), ErrKind::outside_strip,
          fmt("eps continuation at Im l = %g beyond 0.9c", l.imag()));
  cplx conv = 0;
  for (int k = 0; k < grid.size(); ++k)
    conv += lieb_kernel(par, l - cplx(grid.x[k])) * W[k] * grid.w[k];
  return v - par.T * conv / (2.0 * pi);
}

inline cplx ThermalState::eps_d_at(cplx l) const {
  cplx v = 2.0 * l;
  if (par.c_inf) return v;
  require(std::abs(l.imag()) < par.strip(), ErrKind::outside_strip,
          fmt("eps' continuation at Im l = %g beyond 0.9c", l.imag()));
  cplx conv = 0;
  for (int k = 0; k < grid.size(); ++k)
    conv += lieb_kernel_d(par, l - cplx(grid.x[k])) * W[k] * grid.w[k];
  return v - par.T * conv / (2.0 * pi);
}

inline cplx ThermalState::eps_dd_at(cplx l) const {
  cplx v = 2.0;
  if (par.c_inf) return v;
  require(std::abs(l.imag()) < par.strip(), ErrKind::outside_strip,
          fmt("eps'' continuation at Im l = %g beyond 0.9c", l.imag()));
  cplx conv = 0;
  for (int k = 0; k < grid.size(); ++k)
    conv += lieb_kernel_dd(par, l - cplx(grid.x[k])) * W[k] * grid.w[k];
  return v - par.T * conv / (2.0 * pi);
}

// rho_t(l) = 1/2pi + (1/2pi) int K(l-m) theta(m) rho_t(m) dm, valid for
// |Im l| < c (the kernel's own pole bounds the strip).
inline cplx ThermalState::rho_t_at(cplx l) const {
  if (par.c_inf) return cplx(1.0 / (2.0 * pi));
  require(std::abs(l.imag()) < par.c, ErrKind::outside_strip,
          fmt("rho_t continuation at Im l = %g beyond c", l.imag()));
  cplx acc = cplx(1.0 / (2.0 * pi));
  for (int k = 0; k < grid.size(); ++k)
    acc += lieb_kernel(par, l - cplx(grid.x[k])) * theta[k] * rho_t[k] * grid.w[k] / (2.0 * pi);
  return acc;
}

}  // namespace qnls

#endif
