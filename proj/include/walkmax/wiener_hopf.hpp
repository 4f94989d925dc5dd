#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include "walkmax/complexops.hpp"
#include "walkmax/contours.hpp"
#include "walkmax/errors.hpp"
#include "walkmax/models.hpp"

namespace walkmax {

// Two fixed sinh contours in the Fourier plane: L+ (wings up, crosses the
// imaginary axis inside (0, mu_plus)) and L- (wings down, crossing inside
// (mu_minus, 0)). Arrays are indexed j = 0..2N, y_j = (j - N) * step.
struct ContourPair {
  SinhMap map_plus, map_minus;
  TrapezoidGrid grid_plus{1.0, 1, false}, grid_minus{1.0, 1, false};
  std::vector<cx> xi_plus, xi_minus;
  std::vector<cx> der_plus, der_minus;
  std::vector<cx> phi_plus_vals, phi_minus_vals;
  // kernel tails of the opposite-contour factor integrals, precomputed
  std::vector<cx> tail_minus_at_plus, tail_plus_at_minus;
  int n_plus = 0, n_minus = 0;
  StripBounds strip;

  int size_plus() const { return 2 * n_plus + 1; }
  int size_minus() const { return 2 * n_minus + 1; }
};

struct CauchyKernels {
  // d_plus[j * cols + k] = 1/(xi_plus_j - xi_minus_k); d_minus = -transpose
  std::vector<cx> d_plus, d_minus;
  int rows = 0, cols = 0;  // rows over L+, cols over L-

  cx dp(int j, int k) const { return d_plus[size_t(j) * cols + k]; }
  cx dm(int k, int j) const { return d_minus[size_t(k) * rows + j]; }
};

// Per-q factor values on both grids plus the flattening constants.
// On the native grid the factor comes from its exponential formula; on the
// opposite grid from the factorization identity.
struct WhfFactors {
  cx q;
  std::vector<cx> phi_plus_on_plus, phi_minus_on_minus;
  std::vector<cx> phi_plus_on_minus, phi_minus_on_plus;
  cx c_plus{std::numeric_limits<double>::quiet_NaN(), 0.0};
  cx c_minus{std::numeric_limits<double>::quiet_NaN(), 0.0};
  bool has_constants = false;
};

struct CertReport {
  bool ok = true;
  double min_distance = std::numeric_limits<double>::infinity();
  double max_abs_fraction = 0.0;
  cx witness_q, witness_eta;
};

namespace whf_detail {

// ln((1-q)/(1-q Phi)) evaluated as -log1p(q (1-Phi)/(1-q)).
inline cx log_fraction(cx q, cx phi_val) {
  return -clog1p(q * (1.0 - phi_val) / (1.0 - q));
}

inline std::vector<cx> sample_points(const SinhMap& m, double zeta, int half) {
  std::vector<cx> pts(2 * half + 1);
  for (int j = 0; j <= 2 * half; ++j) pts[j] = sinh_eval(m, cx((j - half) * zeta, 0.0));
  return pts;
}

inline std::vector<cx> sample_derivs(const SinhMap& m, double zeta, int half) {
  std::vector<cx> d(2 * half + 1);
  for (int j = 0; j <= 2 * half; ++j)
    d[j] = sinh_deriv(m, cx((j - half) * zeta, 0.0), MapVariant::FourierPlane);
  return d;
}

// Omitted trapezoid terms of the factor-exponent sum beyond the symmetric
// truncation at |j| = half: out there Phi has died, the log factor equals
// ln(1-q), and the remaining kernel terms xi/(eta(xi-eta)) der are q-free.
// Left/right wings are summed together (they cancel pairwise), and the
// remainder past the extension decays like |xi|/|eta|.
inline cx kernel_tail(const SinhMap& m, double zeta, int half, cx xi) {
  cx acc(0.0, 0.0);
  for (int j = half + 400; j > half; --j) {
    for (int dir : {-1, 1}) {
      cx y(dir * j * zeta, 0.0);
      cx eta = sinh_eval(m, y);
      cx der = sinh_deriv(m, y, MapVariant::FourierPlane);
      acc += der * xi / (eta * (xi - eta));
    }
  }
  return acc * zeta;
}

}  // namespace whf_detail

// Exponent of a Wiener-Hopf factor at the points xi by the simplified
// trapezoid rule over the given integration contour. plus_factor selects the
// sign: phi+ integrates over a contour below xi, phi- over one above.
inline std::vector<cx> factor_exponent_over(cx q, std::span<const cx> xi,
                                            const SinhMap& map, const std::vector<cx>& eta,
                                            const std::vector<cx>& der,
                                            const std::vector<cx>& phi_vals, double zeta,
                                            bool plus_factor) {
  const size_t m = eta.size();
  const int half = int(m - 1) / 2;
  std::vector<cx> t(m);
  for (size_t k = 0; k < m; ++k)
    t[k] = whf_detail::log_fraction(q, phi_vals[k]) * der[k] / eta[k];

  // phi+: -(1/2pi i) = +i/2pi ; phi-: -i/2pi
  cx quad_pref = cx(0.0, plus_factor ? 1.0 : -1.0) * (zeta / (2.0 * kPi));
  cx tail_pref = cx(0.0, plus_factor ? 1.0 : -1.0) / (2.0 * kPi) * clog1p(-q);
  std::vector<cx> out(xi.size());
  for (size_t p = 0; p < xi.size(); ++p) {
    cx acc(0.0, 0.0);
    for (size_t k = 0; k < m; ++k) acc += t[k] / (xi[p] - eta[k]);
    cx e = quad_pref * xi[p] * acc +
           tail_pref * whf_detail::kernel_tail(map, zeta, half, xi[p]);
    if (!finite(e)) throw NonFiniteExponent("factor exponent not finite");
    out[p] = e;
  }
  return out;
}

inline std::vector<cx> factor_plus(cx q, std::span<const cx> xi, const ContourPair& pair) {
  auto e = factor_exponent_over(q, xi, pair.map_minus, pair.xi_minus, pair.der_minus,
                                pair.phi_minus_vals, pair.grid_minus.step, true);
  std::vector<cx> out(e.size());
  for (size_t i = 0; i < e.size(); ++i) out[i] = std::exp(e[i]);
  return out;
}

inline std::vector<cx> factor_minus(cx q, std::span<const cx> xi, const ContourPair& pair) {
  auto e = factor_exponent_over(q, xi, pair.map_plus, pair.xi_plus, pair.der_plus,
                                pair.phi_plus_vals, pair.grid_plus.step, false);
  std::vector<cx> out(e.size());
  for (size_t i = 0; i < e.size(); ++i) out[i] = std::exp(e[i]);
  return out;
}

// phi_opposite = (1-q) / ((1-q Phi) * phi_known), pointwise.
inline std::vector<cx> factor_via_identity(cx q, const std::vector<cx>& phi_known,
                                           const std::vector<cx>& phi_vals) {
  std::vector<cx> out(phi_known.size());
  for (size_t i = 0; i < phi_known.size(); ++i) {
    cx denom = (1.0 - q * phi_vals[i]) * phi_known[i];
    if (std::abs(denom) == 0.0)
      throw DivisionByZero("factor_via_identity: vanishing factor value");
    out[i] = (1.0 - q) / denom;
  }
  return out;
}

// c+_q integrates over a contour below 0 (L-), c-_q over one above 0 (L+).
inline cx constant_cpm(cx q, const ContourPair& pair, int sign) {
  const bool plus = sign > 0;
  const auto& eta = plus ? pair.xi_minus : pair.xi_plus;
  const auto& der = plus ? pair.der_minus : pair.der_plus;
  const auto& phv = plus ? pair.phi_minus_vals : pair.phi_plus_vals;
  double zeta = plus ? pair.grid_minus.step : pair.grid_plus.step;
  cx acc(0.0, 0.0);
  for (size_t k = 0; k < eta.size(); ++k) acc += clog1p(-q * phv[k]) * der[k] / eta[k];
  // +- (1/2pi i) = -+ i/2pi
  cx pref = cx(0.0, plus ? -1.0 : 1.0) * (zeta / (2.0 * kPi));
  cx e = pref * acc;
  if (!finite(e)) throw NonFiniteExponent("constant_cpm: exponent not finite");
  return std::exp(e);
}

// Index windows over the two grids; factor values are produced only there.
struct FactorWindow {
  int lo_plus = 0, hi_plus = -1, lo_minus = 0, hi_minus = -1;  // -1: full
};

// Factors on both grids for one q (main block steps IV(1)-(2)). The native
// evaluation reuses the Cauchy kernel matrices; the window restricts which
// evaluation points are filled in (the integration always spans the full
// opposite grid).
inline WhfFactors compute_factors(cx q, const ContourPair& pair, const CauchyKernels& ker,
                                  const FactorWindow& win = {}) {
  WhfFactors f;
  f.q = q;
  const int np = pair.size_plus(), nm = pair.size_minus();
  const int jp0 = win.hi_plus < 0 ? 0 : win.lo_plus;
  const int jp1 = win.hi_plus < 0 ? np - 1 : win.hi_plus;
  const int km0 = win.hi_minus < 0 ? 0 : win.lo_minus;
  const int km1 = win.hi_minus < 0 ? nm - 1 : win.hi_minus;

  std::vector<cx> tm(nm), tp(np);
  for (int k = 0; k < nm; ++k)
    tm[k] = whf_detail::log_fraction(q, pair.phi_minus_vals[k]) * pair.der_minus[k] /
            pair.xi_minus[k];
  for (int j = 0; j < np; ++j)
    tp[j] = whf_detail::log_fraction(q, pair.phi_plus_vals[j]) * pair.der_plus[j] /
            pair.xi_plus[j];

  cx pref_p = cx(0.0, 1.0) * (pair.grid_minus.step / (2.0 * kPi));
  cx pref_m = cx(0.0, -1.0) * (pair.grid_plus.step / (2.0 * kPi));
  cx log1mq = clog1p(-q);
  cx tail_p = cx(0.0, 1.0) / (2.0 * kPi) * log1mq;
  cx tail_m = cx(0.0, -1.0) / (2.0 * kPi) * log1mq;

  f.phi_plus_on_plus.assign(np, cx(0.0, 0.0));
  for (int j = jp0; j <= jp1; ++j) {
    cx acc(0.0, 0.0);
    const cx* row = &ker.d_plus[size_t(j) * nm];
    for (int k = 0; k < nm; ++k) acc += row[k] * tm[k];
    cx e = pref_p * pair.xi_plus[j] * acc + tail_p * pair.tail_minus_at_plus[j];
    if (!finite(e)) throw NonFiniteExponent("phi+ exponent not finite");
    f.phi_plus_on_plus[j] = std::exp(e);
  }
  f.phi_minus_on_minus.assign(nm, cx(0.0, 0.0));
  for (int k = km0; k <= km1; ++k) {
    cx acc(0.0, 0.0);
    const cx* row = &ker.d_minus[size_t(k) * np];
    for (int j = 0; j < np; ++j) acc += row[j] * tp[j];
    cx e = pref_m * pair.xi_minus[k] * acc + tail_m * pair.tail_plus_at_minus[k];
    if (!finite(e)) throw NonFiniteExponent("phi- exponent not finite");
    f.phi_minus_on_minus[k] = std::exp(e);
  }
  f.phi_plus_on_minus.assign(nm, cx(0.0, 0.0));
  f.phi_minus_on_plus.assign(np, cx(0.0, 0.0));
  for (int k = km0; k <= km1; ++k) {
    cx denom = (1.0 - q * pair.phi_minus_vals[k]) * f.phi_minus_on_minus[k];
    if (std::abs(denom) == 0.0) throw DivisionByZero("factor identity: vanishing value");
    f.phi_plus_on_minus[k] = (1.0 - q) / denom;
  }
  for (int j = jp0; j <= jp1; ++j) {
    cx denom = (1.0 - q * pair.phi_plus_vals[j]) * f.phi_plus_on_plus[j];
    if (std::abs(denom) == 0.0) throw DivisionByZero("factor identity: vanishing value");
    f.phi_minus_on_plus[j] = (1.0 - q) / denom;
  }
  return f;
}

inline void attach_constants(WhfFactors& f, const ContourPair& pair) {
  if (f.has_constants) return;
  f.c_plus = constant_cpm(f.q, pair, +1);
  f.c_minus = constant_cpm(f.q, pair, -1);
  f.has_constants = true;
}

// Checks that (1-q)/(1-q Phi(eta)) stays clear of the log cut (-inf, 0] for
// every q of the inversion grid, eta on both contours and on intermediate
// homotopy contours (tilt angle scaled by t in [0,1], same b and shift).
inline CertReport certify_deformation(std::span<const cx> q_grid, const ContourPair& pair,
                                      const Model& model, double margin = 1e-6) {
  CertReport rep;
  // every q is checked; for very long inversion grids the eta sampling is
  // thinned to keep the sweep affordable
  const bool big = q_grid.size() > 512;
  std::vector<double> tilts = big ? std::vector<double>{0.0, 0.5, 1.0}
                                  : std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0};
  const int eta_samples = big ? 129 : 257;
  for (int side = 0; side < 2; ++side) {
    const SinhMap& m = side == 0 ? pair.map_plus : pair.map_minus;
    const TrapezoidGrid& g = side == 0 ? pair.grid_plus : pair.grid_minus;
    int half = side == 0 ? pair.n_plus : pair.n_minus;
    int stride = std::max(1, (2 * half + 1) / eta_samples);
    std::vector<double> ys;
    for (int j = 0; j <= 2 * half; j += stride) ys.push_back((j - half) * g.step);
    ys.push_back(0.0);  // the apex is the nearest point to the cut; never skip it
    for (double t : tilts) {
      SinhMap mt(m.shift, m.b, t * m.omega);
      for (double yv : ys) {
        cx eta = sinh_eval(mt, cx(yv, 0.0));
        cx phi_eta = model.phi(eta);
        for (cx q : q_grid) {
          cx denom = 1.0 - q * phi_eta;
          cx w = (1.0 - q) / denom;
          double dist = dist_to_neg_ray(w);
          double mag = std::abs(w);
          rep.max_abs_fraction = std::max(rep.max_abs_fraction, mag);
          if (dist < rep.min_distance) {
            rep.min_distance = dist;
            rep.witness_q = q;
            rep.witness_eta = eta;
          }
          if (dist < margin || mag > 1e14 || !finite(w)) {
            rep.ok = false;
            rep.witness_q = q;
            rep.witness_eta = eta;
            rep.min_distance = std::min(rep.min_distance, dist);
            return rep;
          }
        }
      }
    }
  }
  return rep;
}

inline void require_certified(const CertReport& rep) {
  if (!rep.ok)
    throw DeformationInvalid("deformation certification failed", rep.witness_q,
                             rep.witness_eta, rep.min_distance);
}

struct ContourOverrides {
  int n_plus = 0;   // 0 = auto
  int n_minus = 0;
};

// Fixed contour pair from the model cone and a certified strip. Angles follow
// the one-third rule; apex heights sit at half the strip bounds; steps come
// from the discretization bound and the truncation reaches the point where
// Phi has decayed below tolerance along the wings.
inline ContourPair build_contour_pair(const Model& model, const StripBounds& strip,
                                      double tol, const ContourOverrides& ov = {}) {
  AnalyticityInfo info = model.analyticity();
  ContourPair pair;
  pair.strip = strip;

  double span = info.gamma_plus - info.gamma_minus;
  double om_plus = info.gamma_plus - span / 3.0;
  double om_minus = info.gamma_minus + span / 3.0;

  auto half_width = [&](double om, double gap_to_cone) {
    return std::min({0.45 * (om_plus - om_minus), 0.95 * gap_to_cone,
                     0.95 * (kPi / 2.0 - std::abs(om))});
  };
  double d_plus = half_width(om_plus, info.gamma_plus - om_plus);
  double d_minus = half_width(om_minus, om_minus - info.gamma_minus);

  double h_plus = 0.5 * strip.mu_plus;
  double h_minus = 0.5 * strip.mu_minus;
  double b_plus = (0.5 * h_plus) / (std::sin(om_plus) - std::sin(om_plus - d_plus));
  double b_minus =
      (0.5 * std::abs(h_minus)) / (std::sin(std::abs(om_minus)) - std::sin(std::abs(om_minus) - d_minus));
  double om1_plus = h_plus - b_plus * std::sin(om_plus);
  double om1_minus = h_minus - b_minus * std::sin(om_minus);

  pair.map_plus = SinhMap(cx(0.0, om1_plus), b_plus, om_plus);
  pair.map_minus = SinhMap(cx(0.0, om1_minus), b_minus, om_minus);

  double eps_f = std::max(tol * 1e-2, 1e-15);

  // Truncation: reach |xi| where |Phi| has dropped below eps_f along the
  // least-decaying edge of each strip.
  auto trunc_for = [&](double om, double d, double b) {
    double theta = std::abs(om) + d;
    double rate = model.dt() * info.decay_coeff * std::max(std::cos(info.decay_order * theta), 0.05);
    double xi_death = std::pow(std::log(10.0 / eps_f) / rate, 1.0 / info.decay_order);
    return std::log(2.0 * xi_death / b) + 1.0;
  };

  // Hardy estimate sampled on the strip edges: factor-exponent integrand with
  // the evaluation-point kernel bounded by 1/contour separation.
  auto hardy_for = [&](const SinhMap& m, double d, double lam) {
    double sep = std::max(0.125 * (strip.mu_plus - strip.mu_minus), 1e-3);
    double worst = 0.0;
    for (int s = 0; s <= 64; ++s) {
      double y = -lam + 2.0 * lam * s / 64.0;
      for (double sd : {-d, d}) {
        cx eta = sinh_eval(m, cx(y, sd));
        cx der = sinh_deriv(m, cx(y, sd), MapVariant::FourierPlane);
        double mag = std::abs(der) / std::max(std::abs(eta), 1e-6) *
                     (1.0 + std::abs(eta) / (std::abs(eta) + sep));
        worst = std::max(worst, mag);
      }
    }
    return 4.0 * worst * (2.0 + std::abs(std::log(eps_f)));
  };

  double lam_plus = trunc_for(om_plus, d_plus, b_plus);
  double lam_minus = trunc_for(om_minus, d_minus, b_minus);
  double zeta_plus =
      choose_step_from_bound(d_plus, hardy_for(pair.map_plus, d_plus, lam_plus) + 10.0, eps_f);
  double zeta_minus =
      choose_step_from_bound(d_minus, hardy_for(pair.map_minus, d_minus, lam_minus) + 10.0, eps_f);

  int n_plus = ov.n_plus > 0 ? ov.n_plus : std::min(1500, int(std::ceil(lam_plus / zeta_plus)));
  int n_minus = ov.n_minus > 0 ? ov.n_minus : std::min(1500, int(std::ceil(lam_minus / zeta_minus)));

  pair.grid_plus = TrapezoidGrid(zeta_plus, n_plus, false);
  pair.grid_minus = TrapezoidGrid(zeta_minus, n_minus, false);
  pair.n_plus = n_plus;
  pair.n_minus = n_minus;

  pair.xi_plus = whf_detail::sample_points(pair.map_plus, zeta_plus, n_plus);
  pair.der_plus = whf_detail::sample_derivs(pair.map_plus, zeta_plus, n_plus);
  pair.xi_minus = whf_detail::sample_points(pair.map_minus, zeta_minus, n_minus);
  pair.der_minus = whf_detail::sample_derivs(pair.map_minus, zeta_minus, n_minus);

  pair.phi_plus_vals.resize(pair.xi_plus.size());
  for (size_t j = 0; j < pair.xi_plus.size(); ++j)
    pair.phi_plus_vals[j] = model.phi(pair.xi_plus[j]);
  pair.phi_minus_vals.resize(pair.xi_minus.size());
  for (size_t k = 0; k < pair.xi_minus.size(); ++k)
    pair.phi_minus_vals[k] = model.phi(pair.xi_minus[k]);

  pair.tail_minus_at_plus.resize(pair.xi_plus.size());
  for (size_t j = 0; j < pair.xi_plus.size(); ++j)
    pair.tail_minus_at_plus[j] =
        whf_detail::kernel_tail(pair.map_minus, zeta_minus, n_minus, pair.xi_plus[j]);
  pair.tail_plus_at_minus.resize(pair.xi_minus.size());
  for (size_t k = 0; k < pair.xi_minus.size(); ++k)
    pair.tail_plus_at_minus[k] =
        whf_detail::kernel_tail(pair.map_plus, zeta_plus, n_plus, pair.xi_minus[k]);

  return pair;
}

inline CauchyKernels build_kernels(const ContourPair& pair) {
  CauchyKernels ker;
  ker.rows = pair.size_plus();
  ker.cols = pair.size_minus();
  ker.d_plus.resize(size_t(ker.rows) * ker.cols);
  ker.d_minus.resize(size_t(ker.cols) * ker.rows);
  for (int j = 0; j < ker.rows; ++j)
    for (int k = 0; k < ker.cols; ++k) {
      cx v = 1.0 / (pair.xi_plus[j] - pair.xi_minus[k]);
      ker.d_plus[size_t(j) * ker.cols + k] = v;
      ker.d_minus[size_t(k) * ker.rows + j] = -v;
    }
  return ker;
}

}  // namespace walkmax
