#pragma once

#include <cmath>
#include <complex>
#include <limits>

#include "walkmax/errors.hpp"

namespace walkmax {

using cx = std::complex<double>;

inline constexpr double kPi = 3.141592653589793238462643383279502884;

// log(1+z) without cancellation for small |z|.
inline cx clog1p(cx z) {
  cx u = 1.0 + z;
  if (u == cx(1.0, 0.0)) return z;
  cx d = u - 1.0;
  // rescale by z/d to undo the rounding in 1+z
  return std::log(u) * (z / d);
}

// Distance from w to the ray (-inf, 0].
inline double dist_to_neg_ray(cx w) {
  if (w.real() <= 0.0) return std::abs(w.imag());
  return std::abs(w);
}

// Principal z^p with an explicit branch-cut check on (-inf, 0].
inline cx pow_principal(cx z, double p, double cut_margin = 0.0) {
  if (z.real() <= 0.0 && std::abs(z.imag()) <= cut_margin)
    throw BranchCutError("pow_principal: argument on the cut (-inf,0]");
  return std::pow(z, p);
}

inline bool finite(cx z) {
  return std::isfinite(z.real()) && std::isfinite(z.imag());
}

}  // namespace walkmax
