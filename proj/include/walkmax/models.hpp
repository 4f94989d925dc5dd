#pragma once

#include <cmath>
#include <complex>
#include <memory>

#include "walkmax/complexops.hpp"
#include "walkmax/errors.hpp"

namespace walkmax {

// Strip and cone on which the per-step characteristic function continues
// analytically and decays, plus the decay law |Phi| <= C exp(-c dt |xi|^nu).
struct AnalyticityInfo {
  double mu_minus = 0.0;
  double mu_plus = 0.0;
  double gamma_minus = 0.0;
  double gamma_plus = 0.0;
  double decay_order = 0.0;   // nu
  double decay_coeff = 0.0;   // c_inf (per unit time, along the worst admissible ray)
  double drift = 0.0;         // finite-variation drift; zero for the shipped model
};

struct StripBounds {
  double mu_minus = 0.0;
  double mu_plus = 0.0;
  double margin = 0.0;  // min over the strip of Re(1 - q Phi)
};

// Minimal model interface: per-step characteristic exponent/function plus
// analyticity metadata. Only KoBoL ships; tests plug in synthetic wrappers.
class Model {
 public:
  virtual ~Model() = default;
  virtual cx psi(cx xi) const = 0;
  virtual cx phi(cx xi) const = 0;
  virtual double dt() const = 0;
  virtual AnalyticityInfo analyticity() const = 0;
};

// Tempered-stable walk increment: psi(xi) = c Gamma(-nu) (lp^nu - (lp+i xi)^nu
// + (-lm)^nu - (-lm - i xi)^nu), Phi(xi) = exp(-dt psi(xi)).
class KoBoLModel final : public Model {
 public:
  double nu, lambda_plus, lambda_minus, c_intensity, dt_;

  KoBoLModel(double nu_, double lp, double lm, double c, double dt_y)
      : nu(nu_), lambda_plus(lp), lambda_minus(lm), c_intensity(c), dt_(dt_y) {
    if (!(nu > 0.0) || !(nu <= 2.0)) throw Error("KoBoL: nu must be in (0,2]");
    if (std::abs(nu - 1.0) < 1e-12) throw Error("KoBoL: nu = 1 not supported");
    if (!(lm < 0.0) || !(lp > 0.0)) throw Error("KoBoL: need lambda_minus < 0 < lambda_plus");
    if (!(c > 0.0)) throw Error("KoBoL: c must be positive");
    if (!(dt_y > 0.0)) throw Error("KoBoL: dt must be positive");
  }

  cx psi(cx xi) const override {
    const cx i(0.0, 1.0);
    cx zp = lambda_plus + i * xi;
    cx zm = -lambda_minus - i * xi;
    if (zp.real() <= 0.0 && zp.imag() == 0.0)
      throw BranchCutError("KoBoL psi: lambda_plus + i xi on (-inf,0]");
    if (zm.real() <= 0.0 && zm.imag() == 0.0)
      throw BranchCutError("KoBoL psi: -lambda_minus - i xi on (-inf,0]");
    double g = std::tgamma(-nu);
    // constant terms written out so psi(0) cancels exactly
    cx val = std::pow(cx(lambda_plus), nu) - std::pow(zp, nu) +
             std::pow(cx(-lambda_minus), nu) - std::pow(zm, nu);
    return c_intensity * g * val;
  }

  cx phi(cx xi) const override { return std::exp(-dt_ * psi(xi)); }

  double dt() const override { return dt_; }

  AnalyticityInfo analyticity() const override {
    AnalyticityInfo a;
    a.mu_minus = lambda_minus;
    a.mu_plus = lambda_plus;
    double half = std::min(kPi / 2.0, kPi / (2.0 * nu));
    a.gamma_minus = -half;
    a.gamma_plus = half;
    a.decay_order = nu;
    // decay coefficient along a ray at angle theta: -c G(-nu) 2 cos(nu theta) cos(nu pi/2)
    a.decay_coeff = -c_intensity * std::tgamma(-nu) * 2.0 * std::cos(nu * kPi / 2.0);
    a.drift = 0.0;
    return a;
  }
};

// c such that psi''(0) = m2: psi''(0) = c Gamma(2-nu) (lp^(nu-2) + (-lm)^(nu-2)).
inline double calibrate_c(double nu, double lambda_plus, double lambda_minus, double m2) {
  if (std::abs(nu - 1.0) < 1e-12) throw Error("calibrate_c: nu = 1 not supported");
  double denom = std::tgamma(2.0 - nu) *
                 (std::pow(lambda_plus, nu - 2.0) + std::pow(-lambda_minus, nu - 2.0));
  return m2 / denom;
}

// Largest strip inside (lambda_minus, lambda_plus) on which
// Re(1 - q Phi(xi)) stays positive for every |q| <= q_max. Since
// |Phi(u+iv)| <= Phi(iv), it is enough to control Phi on the imaginary axis.
inline StripBounds strip_bounds(const Model& model, double q_max) {
  if (!(q_max > 0.0) || !(q_max < 1.0))
    throw StripNotFound("strip_bounds: no strip exists unless q_max is in (0,1)");
  AnalyticityInfo info = model.analyticity();
  double budget = (1.0 - 0.5 * (1.0 - q_max)) / q_max;  // Phi(iv) allowed up to this

  auto phi_on_axis = [&](double v) { return std::abs(model.phi(cx(0.0, v))); };

  auto expand = [&](double cap, double sgn) {
    // largest m in (0, |cap|) with phi(i sgn m) <= budget, monotone-sampled + bisected
    double lo = 0.0, hi = 0.999 * std::abs(cap);
    if (phi_on_axis(sgn * hi) <= budget) return hi;
    for (int it = 0; it < 200; ++it) {
      double mid = 0.5 * (lo + hi);
      bool ok = true;
      // sample the whole segment: Phi(iv) need not be monotone
      for (int s = 1; s <= 16; ++s) {
        if (phi_on_axis(sgn * mid * s / 16.0) > budget) { ok = false; break; }
      }
      if (ok) lo = mid; else hi = mid;
    }
    return lo;
  };

  StripBounds out;
  out.mu_plus = expand(info.mu_plus, +1.0);
  out.mu_minus = -expand(info.mu_minus, -1.0);
  if (out.mu_plus < 1e-9 || out.mu_minus > -1e-9)
    throw StripNotFound("strip_bounds: no strip with positive margin");
  double worst = std::max(phi_on_axis(out.mu_minus), phi_on_axis(out.mu_plus));
  out.margin = 1.0 - q_max * worst;
  return out;
}

}  // namespace walkmax
