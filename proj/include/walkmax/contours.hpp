#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "walkmax/complexops.hpp"
#include "walkmax/errors.hpp"

namespace walkmax {

// Conformal map chi(y) = shift + b*sinh(i*omega + y).
//
// Two uses share this type. In the disc plane (inverse Z-transform) the
// contour is shift + i*b*sinh(i*omega+y) with real shift; in the Fourier
// plane it is i*omega1 + b*sinh(i*omega+y). The extra factor i of the disc
// variant lives in zplane_point / the ZPlane derivative, not in the map.
struct SinhMap {
  cx shift;
  double b = 1.0;
  double omega = 0.0;

  SinhMap() = default;
  SinhMap(cx shift_, double b_, double omega_) : shift(shift_), b(b_), omega(omega_) {
    if (!(b > 0.0)) throw Error("SinhMap: b must be positive");
    if (!(std::abs(omega) < kPi / 2)) throw Error("SinhMap: |omega| must be < pi/2");
  }
};

enum class MapVariant { ZPlane, FourierPlane };

inline cx sinh_eval(const SinhMap& m, cx y) {
  return m.shift + m.b * std::sinh(cx(0.0, m.omega) + y);
}

inline cx sinh_deriv(const SinhMap& m, cx y, MapVariant v) {
  cx c = m.b * std::cosh(cx(0.0, m.omega) + y);
  return v == MapVariant::ZPlane ? cx(0.0, 1.0) * c : c;
}

// Point on the disc-plane contour shift + i*b*sinh(i*omega+y).
inline cx zplane_point(const SinhMap& m, cx y) {
  return m.shift + cx(0.0, 1.0) * m.b * std::sinh(cx(0.0, m.omega) + y);
}

// chi_S(y) = (y + i*omega) * ln^m(a^2 + (y + i*omega)^2), principal log.
// Sub-polynomial deformation used when only one side of the cone is available.
struct SubPolyMap {
  double omega = 0.0;
  int m = 1;
  double a = 1.0;

  SubPolyMap() = default;
  SubPolyMap(double omega_, int m_, double a_) : omega(omega_), m(m_), a(a_) {
    if (!(a > std::abs(omega))) throw Error("SubPolyMap: need a > |omega|");
    if (m < 1) throw Error("SubPolyMap: need m >= 1");
  }
};

inline cx subpoly_eval(const SubPolyMap& m, cx y) {
  cx w = y + cx(0.0, m.omega);
  cx arg = m.a * m.a + w * w;
  if (arg.real() <= 0.0 && std::abs(arg.imag()) == 0.0)
    throw BranchCutError("subpoly_eval: log argument on (-inf,0]");
  cx lg = std::log(arg);
  cx p = 1.0;
  for (int k = 0; k < m.m; ++k) p *= lg;
  return w * p;
}

inline cx subpoly_deriv(const SubPolyMap& m, cx y) {
  cx w = y + cx(0.0, m.omega);
  cx arg = m.a * m.a + w * w;
  if (arg.real() <= 0.0 && std::abs(arg.imag()) == 0.0)
    throw BranchCutError("subpoly_deriv: log argument on (-inf,0]");
  cx lg = std::log(arg);
  cx p = 1.0;
  for (int k = 0; k < m.m - 1; ++k) p *= lg;
  // d/dy [w ln^m(arg)] = ln^m + m ln^(m-1) * 2 w^2 / arg
  return p * lg + double(m.m) * p * 2.0 * w * w / arg;
}

// Uniform grid for the simplified trapezoid rule. When symmetric, the stored
// half (j = 0..half_count, first weight halved) represents the full sum by
// conjugate symmetry.
struct TrapezoidGrid {
  double step = 0.0;
  int half_count = 0;
  bool symmetric = false;

  TrapezoidGrid() = default;
  TrapezoidGrid(double step_, int half_count_, bool symmetric_)
      : step(step_), half_count(half_count_), symmetric(symmetric_) {
    if (!(step > 0.0)) throw Error("TrapezoidGrid: step must be positive");
    if (half_count < 1) throw Error("TrapezoidGrid: half_count must be >= 1");
  }
};

// Step from the infinite-trapezoid discretization bound: with
// zeta = 2*pi*d / ln(H/eps) the discretization error is below
// eps / (1 - eps/H).
inline double choose_step_from_bound(double d, double hardy_estimate, double tol) {
  if (!(d > 0.0)) throw Error("choose_step_from_bound: d must be positive");
  if (!(tol > 0.0) || !(tol < hardy_estimate))
    throw InvalidTolerance("choose_step_from_bound: need 0 < tol < hardy_estimate");
  return 2.0 * kPi * d / std::log(hardy_estimate / tol);
}

// Truncation half-length Lambda = ln(C/eps)/(n - a) - ln(b/2) from the
// (b/2 e^{|y|})^{-(n-a)} tail decay of the disc-plane integrand.
inline double choose_truncation(double n, double a_tv, double c_tv, double b, double tol) {
  if (!(n > a_tv)) throw InvalidOrder("choose_truncation: need n > a_tv");
  if (!(c_tv > 0.0) || !(tol > 0.0) || !(b > 0.0))
    throw Error("choose_truncation: c_tv, b, tol must be positive");
  return std::log(c_tv / tol) / (n - a_tv) - std::log(b / 2.0);
}

}  // namespace walkmax
