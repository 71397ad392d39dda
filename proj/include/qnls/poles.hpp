#ifndef QNLS_POLES_HPP
#define QNLS_POLES_HPP

#include <optional>

#include "qnls/thermo.hpp"

namespace qnls {

// Zeros of 1 + e^{-eps/T} off the real axis.  They sit near the free-fermion
// lattice  l^2 = mu + i pi T (2m+1), one family per (half-plane, side) pair,
// and are the singularities the deformed contours must thread through.
struct PoleKey {
  int half = +1;   // +1: Im > 0, -1: Im < 0
  char side = 'R';  // 'R': Re > 0 branch, 'L': Re < 0 branch
  int m = 0;        // level, counted outward from the real axis

  bool operator==(const PoleKey& o) const {
    return half == o.half && side == o.side && m == o.m;
  }
};

struct PoleEntry {
  PoleKey key;
  cplx seed = 0;       // free-fermion prediction
  cplx root = 0;       // refined zero of 1 + e^{-eps/T}
  double residual = 0;  // |1 + e^{-eps(root)/T}|
  cplx theta_reg = 0;  // residue of the Fermi weight at the pole: -T / eps'(root)
};

// Free-fermion seed for a given key.  Principal square roots; the four
// (half, side) combinations pick the lattice sheet that keeps seeds in their
// quadrant for real h and small alpha.
inline cplx pole_seed(cplx mu, double T, const PoleKey& k) {
  cplx off = iu * pi * T * double(2 * k.m + 1);
  if (k.half > 0 && k.side == 'R') return std::sqrt(mu + off);
  if (k.half > 0 && k.side == 'L') return -std::sqrt(mu - off);
  if (k.half < 0 && k.side == 'R') return std::sqrt(mu - off);
  return -std::sqrt(mu + off);
}

inline cplx refine_pole(const ThermalState& th, cplx seed, double tol = 1e-12,
                        int max_iter = 60) {
  const double T = th.par.T;
  auto g = [&](cplx z) { return 1.0 + std::exp(-th.eps_at(z) / T); };
  auto gp = [&](cplx z) { return -th.eps_d_at(z) / T * std::exp(-th.eps_at(z) / T); };
  return newton_root(g, gp, seed, tol, max_iter, 0.5);
}

// Newton from the free-fermion seed; if that fails at strong coupling the
// root is tracked in from c = 1e8 along a geometric 1/c path (each step
// re-solves the thermal state, so this is the slow path).
inline PoleEntry locate_pole(const ThermalState& th, const PoleKey& key, double tol = 1e-12) {
  PoleEntry e;
  e.key = key;
  e.seed = pole_seed(th.mu, th.par.T, key);
  if (!th.par.c_inf)
    require(std::abs(e.seed.imag()) < th.par.strip(), ErrKind::seed_outside_strip,
            fmt("pole seed Im %g outside |Im| < 0.9c", e.seed.imag()));
  if (th.par.c_inf) {
    e.root = e.seed;
    e.residual = std::abs(1.0 + std::exp(-(e.root * e.root - th.mu) / th.par.T));
    e.theta_reg = -th.par.T / (2.0 * e.root);
    return e;
  }
  try {
    e.root = refine_pole(th, e.seed, tol);
  } catch (const Error&) {
    cplx guess = e.seed;
    GridSpec gs;
    gs.half_width = th.grid.half_width;
    gs.panels = th.grid.panels;
    gs.order = th.grid.order;
    double c0 = std::max(1e6, 1e3 * th.par.c);
    for (int s = 0; s <= 8; ++s) {
      double cc = th.par.c * std::pow(c0 / th.par.c, (8 - s) / 8.0);
      ModelParams pc = th.par;
      pc.c = cc;
      pc.c_inf = false;
      ThermalState tc = (s == 8) ? th : solve_thermal(pc, th.mu, gs);
      guess = refine_pole(tc, guess, tol);
    }
    e.root = guess;
  }
  require(std::abs(e.root.imag()) < th.par.strip(), ErrKind::root_left_strip,
          fmt("pole escaped strip: Im %g", e.root.imag()));
  require(e.root.imag() * key.half > 0, ErrKind::root_left_strip, "pole crossed the real axis");
  e.residual = std::abs(1.0 + std::exp(-th.eps_at(e.root) / th.par.T));
  e.theta_reg = -th.par.T / th.eps_d_at(e.root);
  return e;
}

struct PoleTable {
  std::vector<PoleEntry> entries;

  const PoleEntry* find(const PoleKey& k) const {
    for (const auto& e : entries)
      if (e.key == k) return &e;
    return nullptr;
  }
};

// All poles with level <= m_max whose seeds fit in the strip.  Levels beyond
// the strip cap are skipped silently: they exist but are out of reach of the
// contour machinery at this coupling.
inline PoleTable locate_poles(const ThermalState& th, int m_max) {
  PoleTable t;
  for (int m = 0; m <= m_max; ++m)
    for (int half : {+1, -1})
      for (char side : {'R', 'L'}) {
        PoleKey k{half, side, m};
        cplx s = pole_seed(th.mu, th.par.T, k);
        if (!th.par.c_inf && std::abs(s.imag()) >= th.par.strip()) continue;
        t.entries.push_back(locate_pole(th, k));
      }
  return t;
}

// Argument-principle audit: number of zeros of 1 + e^{-eps/T} in a rectangle.
inline int pole_count_in(const ThermalState& th, double x0, double x1, double y0, double y1) {
  const double T = th.par.T;
  auto g = [&](cplx z) { return 1.0 + std::exp(-th.eps_at(z) / T); };
  auto gp = [&](cplx z) { return -th.eps_d_at(z) / T * std::exp(-th.eps_at(z) / T); };
  return count_zeros(g, gp, x0, x1, y0, y1);
}

}  // namespace qnls

#endif
