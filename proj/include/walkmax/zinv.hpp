#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include "walkmax/complexops.hpp"
#include "walkmax/contours.hpp"
#include "walkmax/errors.hpp"

namespace walkmax {

enum class ZMode { Trapezoid, Sinh };

// Ṽ(z) = sum z^n V_n together with the growth bound |Ṽ(z)| <= C |z|^a used
// for step/truncation selection.
struct TildeFunction {
  std::function<cx(cx)> eval;
  double growth_c = 1.0;
  double growth_a = 0.0;
};

struct ZInversionPlan {
  ZMode mode = ZMode::Trapezoid;

  // Trapezoid: sum over the circle |z| = radius with M = m_total points.
  double radius = 0.5;
  int m_total = 3;

  // Sinh: disc-plane contour sigma + i b sinh(i omega + y), half grid.
  SinhMap contour;
  TrapezoidGrid grid{1.0, 1, true};

  double gamma = 0.0;    // disc-plane cone parameter handed to build_plan
  double a_bound = 1.0;  // radius of known analyticity along the positive axis
  double d_strip = 0.0;  // strip half-width in y
  double tol = 1e-10;
};

// Disc-plane inversion grid q_j and the weights q_j^{-n-1} der_j carry.
inline std::vector<cx> plan_qgrid(const ZInversionPlan& p) {
  std::vector<cx> q;
  if (p.mode == ZMode::Trapezoid) {
    int m0 = (p.m_total - 1) / 2;
    q.reserve(m0 + 1);
    for (int k = 0; k <= m0; ++k) {
      double th = 2.0 * kPi * k / p.m_total;
      q.push_back(p.radius * cx(std::cos(th), std::sin(th)));
    }
  } else {
    q.reserve(p.grid.half_count + 1);
    for (int j = 0; j <= p.grid.half_count; ++j)
      q.push_back(zplane_point(p.contour, cx(j * p.grid.step, 0.0)));
  }
  return q;
}

inline std::vector<cx> plan_qderiv(const ZInversionPlan& p) {
  std::vector<cx> d;
  if (p.mode == ZMode::Sinh) {
    d.reserve(p.grid.half_count + 1);
    for (int j = 0; j <= p.grid.half_count; ++j)
      d.push_back(sinh_deriv(p.contour, cx(j * p.grid.step, 0.0), MapVariant::ZPlane));
  }
  return d;
}

// V_n from samples Ṽ(q_j) on the plan grid. Real result by conjugate
// symmetry. The residual diagnostic is the spurious imaginary leakage of the
// real-axis node (Ṽ there must be real; any imaginary part is evaluator
// asymmetry that the symmetric half-sum cannot cancel).
inline double invert_samples(const ZInversionPlan& p, int n, const std::vector<cx>& vals,
                             double* imag_residual = nullptr) {
  cx acc(0.0, 0.0);
  double resid = 0.0;
  if (p.mode == ZMode::Trapezoid) {
    int m0 = (p.m_total - 1) / 2;
    for (int k = 0; k <= m0; ++k) {
      double th = 2.0 * kPi * k / p.m_total;
      cx q = p.radius * cx(std::cos(th), std::sin(th));
      cx term = std::exp(-double(n) * std::log(q)) * vals[k];
      if (k == 0) {
        term *= 0.5;
        resid = (2.0 / p.m_total) * std::abs(term.imag());
      }
      acc += term;
    }
    acc *= 2.0 / double(p.m_total);
    if (imag_residual) *imag_residual = resid;
    return acc.real();
  }
  for (int j = 0; j <= p.grid.half_count; ++j) {
    cx y(j * p.grid.step, 0.0);
    cx q = zplane_point(p.contour, y);
    cx der = sinh_deriv(p.contour, y, MapVariant::ZPlane);
    cx term = std::exp(-double(n + 1) * std::log(q)) * vals[j] * der;
    if (j == 0) {
      term *= 0.5;
      resid = (p.grid.step / kPi) * std::abs(term.real());
    }
    acc += term;
  }
  acc *= p.grid.step / kPi;
  acc /= cx(0.0, 1.0);  // i of the z-plane derivative; real part is V_n
  if (imag_residual) *imag_residual = resid;
  return acc.real();
}

inline double invert_trapezoid(const TildeFunction& tv, int n, const ZInversionPlan& p) {
  std::vector<cx> vals;
  for (cx q : plan_qgrid(p)) vals.push_back(tv.eval(q));
  return invert_samples(p, n, vals);
}

inline double invert_sinh(const TildeFunction& tv, int n, const ZInversionPlan& p) {
  std::vector<cx> vals;
  for (cx q : plan_qgrid(p)) vals.push_back(tv.eval(q));
  return invert_samples(p, n, vals);
}

namespace detail {

// Supremum of y with |contour-edge point| < 1, by sampling plus bisection on
// [0, 50]. Returns 0 when the edge never dips inside the unit disc.
inline double edge_exit_abscissa(const SinhMap& m, double s_edge) {
  auto mod = [&](double y) { return std::abs(zplane_point(m, cx(y, s_edge))); };
  const int ns = 512;
  double last_in = -1.0;
  for (int s = 0; s <= ns; ++s) {
    double y = 50.0 * s / ns;
    if (mod(y) < 1.0 - 1e-13) last_in = y;
  }
  if (last_in < 0.0) return 0.0;
  if (last_in >= 50.0 - 1e-9) return 50.0;
  double lo = last_in, hi = last_in + 50.0 / ns;
  while (hi - lo > 1e-10) {
    double mid = 0.5 * (lo + hi);
    (mod(mid) < 1.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

// Disc-plane sinh plan from the cone parameter gamma, the analyticity radius
// A and the growth data of Ṽ. Case I covers gamma <= pi/2 (and slightly
// above); Case II the rest. Sub-case (ii) fires when A-1 is small relative
// to 1/n and pins the inner crossing at R = 1 - 5/n.
inline ZInversionPlan build_plan(double gamma, double a_bound, int n, double tol,
                                 double c_tv, double a_tv) {
  if (!(gamma > kPi / 4.0))
    throw GammaTooSmall("build_plan: gamma <= pi/4 admits no sinh deformation");
  if (gamma >= kPi) throw Error("build_plan: gamma must be < pi");
  if (n < 1) throw InvalidOrder("build_plan: n must be >= 1");

  ZInversionPlan p;
  p.mode = ZMode::Sinh;
  p.gamma = gamma;
  p.a_bound = a_bound;
  p.tol = tol;

  bool case_one = (gamma <= kPi / 2.0 + 0.1);
  double omega, d;
  if (case_one) {
    omega = 3.0 * kPi / 8.0 - gamma / 2.0;
    d = 0.95 * (gamma - kPi / 4.0) / 2.0;
  } else {
    omega = (kPi / 2.0 - gamma) / 2.0;
    d = 0.95 * std::abs(omega);
  }

  // crossing(+d) is the inner radius, crossing(-d) the outer one
  bool wide = (a_bound - 1.0 >= 10.0 / double(n));
  double x_in, x_out;
  if (wide) {
    x_in = 1.0;
    x_out = a_bound;
  } else {
    x_in = std::max(1.0 - 5.0 / double(n), 0.25);
    x_out = 1.0;
  }
  double b = (x_out - x_in) / (2.0 * std::cos(omega) * std::sin(d));
  double sigma = x_in + b * std::sin(omega + d);
  p.contour = SinhMap(cx(sigma, 0.0), b, omega);
  p.d_strip = d;

  // Hardy estimate: inner-edge excursion into the unit disc.
  double B = detail::edge_exit_abscissa(p.contour, d);
  double hardy;
  if (wide) {
    hardy = c_tv * std::max(1.0, B);
  } else {
    // min |chi| along the inside-disc part of the inner edge
    double rmin = x_in;
    for (int s = 0; s <= 64; ++s)
      rmin = std::min(rmin, std::abs(zplane_point(p.contour, cx(B * s / 64.0, d))));
    double grow = std::exp(-(double(n) + 1.0) * std::log(rmin));
    hardy = c_tv * std::max(1.0, grow * std::max(B, 1e-2));
  }

  double zeta = choose_step_from_bound(d, std::max(hardy, 4.0 * tol), tol);
  double lambda = choose_truncation(double(n), a_tv, c_tv, b, tol);
  int m0 = std::max(4, int(std::ceil(std::max(lambda, zeta) / zeta)));
  p.grid = TrapezoidGrid(zeta, m0, true);
  return p;
}

// Change of variables z = A z' for A < 1: invert the rescaled transform
// Ṽ(A z') with the stated tightened tolerance, then scale V_n by A^{-n}.
struct RescaledInversion {
  ZInversionPlan plan;
  double a_bound = 1.0;  // the A that was factored out
  double tol_scaled = 0.0;
};

inline RescaledInversion rescale_case_iii(const ZInversionPlan& plan, double a_bound,
                                          int n, double a_tv) {
  RescaledInversion r;
  r.a_bound = a_bound;
  r.tol_scaled = plan.tol * std::pow(a_bound, -double(n) - 1.0 + a_tv);
  r.plan = plan;
  r.plan.a_bound = 1.0;
  r.plan.tol = r.tol_scaled;
  return r;
}

// Trapezoid plan calibrated for double precision: the circle radius keeps
// |q|^{-n} within the cancellation budget and M tracks the tolerance target.
inline ZInversionPlan build_trapezoid_plan(int n, double tol, double multiplier = 1.0) {
  if (n < 0) throw InvalidOrder("build_trapezoid_plan: n must be >= 0");
  ZInversionPlan p;
  p.mode = ZMode::Trapezoid;
  p.tol = tol;
  double x = 7.4;
  p.radius = std::max(0.30, 1.0 - x / std::max(n, 1));
  double per_n = std::log(1.0 / tol) / 7.94;
  int m0_lin = int(std::ceil(per_n * std::max(n, 1) * multiplier));
  int m0_small = int(std::ceil(0.5 * std::log(1e3 / tol) / std::log(1.0 / p.radius)));
  int m0 = std::max({4, m0_lin, m0_small});
  p.m_total = 2 * m0 + 1;
  p.a_bound = 1.0;
  return p;
}

}  // namespace walkmax
