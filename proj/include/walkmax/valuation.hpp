#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include "walkmax/complexops.hpp"
#include "walkmax/errors.hpp"
#include "walkmax/wiener_hopf.hpp"

namespace walkmax {

// Index windows into the contour arrays used for the bilinear (double
// integral) terms. 1D terms always run over the full grids.
struct ValuationRange {
  int lo_plus = 0, hi_plus = 0, lo_minus = 0, hi_minus = 0;
};

struct Workspace {
  const ContourPair& pair;
  const CauchyKernels& kernels;
  ValuationRange range;

  static Workspace full(const ContourPair& p, const CauchyKernels& k) {
    Workspace ws{p, k, {}};
    ws.range.lo_plus = 0;
    ws.range.hi_plus = p.size_plus() - 1;
    ws.range.lo_minus = 0;
    ws.range.hi_minus = p.size_minus() - 1;
    return ws;
  }
};

struct CpdfRequest {
  double a1, a2, x1, x2;
};

enum class CpdfVariant { Fast, Exact };

namespace val_detail {

// 1D term of the joint-cpdf transform: contour side picked by sign(x1-a1);
// deforming down past the pole at 0 leaves the residue constant q/(1-q).
inline cx cpdf_one_d(cx q, double x1, double a1, const ContourPair& pair, cx* base) {
  const bool upper = (x1 - a1 > 0.0);
  const auto& xi = upper ? pair.xi_plus : pair.xi_minus;
  const auto& der = upper ? pair.der_plus : pair.der_minus;
  const auto& phv = upper ? pair.phi_plus_vals : pair.phi_minus_vals;
  double zeta = upper ? pair.grid_plus.step : pair.grid_minus.step;
  const cx i(0.0, 1.0);
  cx acc(0.0, 0.0);
  for (size_t k = 0; k < xi.size(); ++k) {
    cx qphi = q * phv[k];
    acc += std::exp(i * (x1 - a1) * xi[k]) * qphi / (-i * xi[k] * (1.0 - qphi)) * der[k];
  }
  *base = upper ? cx(0.0) : cx(1.0) / (1.0 - q);  // indicator + residue
  return acc * zeta / (2.0 * kPi);
}

}  // namespace val_detail

// Transform of the no-touch claim: (1-q)Ṽ = 1 + (1/2pi) ∫_{L-} e^{i(x1-a2)xi}
// phi+_q(xi)/(-i xi) dxi (the unit is the residue picked up moving the line
// below the pole at 0).
inline cx no_touch_tilde(cx q, double a2, double x1, const WhfFactors& whf,
                         const Workspace& ws) {
  if (x1 > a2) return cx(0.0);
  const ContourPair& pair = ws.pair;
  const cx i(0.0, 1.0);
  cx acc(0.0, 0.0);
  for (int k = ws.range.lo_minus; k <= ws.range.hi_minus; ++k) {
    acc += std::exp(i * (x1 - a2) * pair.xi_minus[k]) * whf.phi_plus_on_minus[k] /
           (-i * pair.xi_minus[k]) * pair.der_minus[k];
  }
  cx val = 1.0 + acc * pair.grid_minus.step / (2.0 * kPi);
  return val / (1.0 - q);
}

// Joint-cpdf transform. Fast variant uses phi+ / phi- in the double integral
// (no flattening constants needed) and reroutes a1 == a2 to the no-touch
// formula; the exact variant keeps phi++ / phi-- and is valid at a1 == a2.
inline cx cpdf_tilde(cx q, const CpdfRequest& req, const WhfFactors& whf,
                     const Workspace& ws, CpdfVariant variant = CpdfVariant::Fast) {
  if (req.x2 > req.a2) return cx(0.0);
  if (!(req.a1 <= req.a2)) throw Error("cpdf_tilde: need a1 <= a2");
  if (!(req.x1 <= req.x2)) throw Error("cpdf_tilde: need x1 <= x2");
  if (!(req.a2 - req.x1 > 1e-12)) throw Error("cpdf_tilde: need a2 > x1");
  if (variant == CpdfVariant::Fast && req.a1 == req.a2)
    return no_touch_tilde(q, req.a2, req.x1, whf, ws);

  const ContourPair& pair = ws.pair;
  const cx i(0.0, 1.0);

  cx base;
  cx one_d = val_detail::cpdf_one_d(q, req.x1, req.a1, pair, &base);

  cx cp = variant == CpdfVariant::Exact ? whf.c_plus : cx(0.0);
  cx cm = variant == CpdfVariant::Exact ? whf.c_minus : cx(0.0);

  std::vector<cx> u(ws.range.hi_minus - ws.range.lo_minus + 1);
  for (int k = ws.range.lo_minus; k <= ws.range.hi_minus; ++k)
    u[k - ws.range.lo_minus] = std::exp(i * (req.x1 - req.a2) * pair.xi_minus[k]) *
                               (whf.phi_plus_on_minus[k] - cp) * pair.der_minus[k];
  cx int2(0.0, 0.0);
  for (int j = ws.range.lo_plus; j <= ws.range.hi_plus; ++j) {
    cx w(0.0, 0.0);
    for (int k = ws.range.lo_minus; k <= ws.range.hi_minus; ++k)
      w += ws.kernels.dp(j, k) * u[k - ws.range.lo_minus];
    cx v = std::exp(i * (req.a2 - req.a1) * pair.xi_plus[j]) *
           (whf.phi_minus_on_plus[j] - cm) * pair.der_plus[j] / pair.xi_plus[j];
    int2 += v * w;
  }
  int2 *= pair.grid_plus.step * pair.grid_minus.step / (4.0 * kPi * kPi);

  return base + one_d + int2 / (1.0 - q);
}

struct BarrierRequest {
  double h;
  double x;
  std::function<cx(cx)> payoff_transform;  // Ĝ(xi)
  double g_at_x = 0.0;                     // G(x)
  bool deform_up = true;                   // side for the 1D term
  std::function<cx(cx)> residue_add;       // q -> constant picked up deforming down
};

// Ṽ(G;h;q,x) = G(x) + (q Phi(D)(1-q Phi(D))^{-1} G)(x)
//              - (1-q)^{-1} (E+_q 1_{[h,inf)} E-_q G)(x), x < h.
inline cx barrier_tilde(cx q, const BarrierRequest& req, const WhfFactors& whf,
                        const Workspace& ws) {
  if (!(req.x < req.h)) throw Error("barrier_tilde: need x < h");
  const ContourPair& pair = ws.pair;
  const cx i(0.0, 1.0);

  // admissible transforms make every combined integrand decay; a non-finite
  // partial product of phase and transform factors is an underflowed tail term
  auto fused = [](cx a, cx b) {
    cx v = a * b;
    return finite(v) ? v : cx(0.0, 0.0);
  };

  cx term2(0.0, 0.0);
  {
    const auto& xi = req.deform_up ? pair.xi_plus : pair.xi_minus;
    const auto& der = req.deform_up ? pair.der_plus : pair.der_minus;
    const auto& phv = req.deform_up ? pair.phi_plus_vals : pair.phi_minus_vals;
    double zeta = req.deform_up ? pair.grid_plus.step : pair.grid_minus.step;
    for (size_t k = 0; k < xi.size(); ++k) {
      cx qphi = q * phv[k];
      term2 += fused(std::exp(i * req.x * xi[k]), req.payoff_transform(xi[k])) * qphi /
               (1.0 - qphi) * der[k];
    }
    term2 *= zeta / (2.0 * kPi);
    if (!req.deform_up && req.residue_add) term2 += req.residue_add(q);
  }

  std::vector<cx> vj(ws.range.hi_plus - ws.range.lo_plus + 1);
  for (int j = ws.range.lo_plus; j <= ws.range.hi_plus; ++j)
    vj[j - ws.range.lo_plus] =
        fused(std::exp(i * req.h * pair.xi_plus[j]), req.payoff_transform(pair.xi_plus[j])) *
        whf.phi_minus_on_plus[j] * pair.der_plus[j];
  cx term3(0.0, 0.0);
  for (int k = ws.range.lo_minus; k <= ws.range.hi_minus; ++k) {
    cx u = std::exp(i * (req.x - req.h) * pair.xi_minus[k]) * whf.phi_plus_on_minus[k] *
           pair.der_minus[k];
    cx inner(0.0, 0.0);
    for (int j = ws.range.lo_plus; j <= ws.range.hi_plus; ++j)
      inner += vj[j - ws.range.lo_plus] / (i * (pair.xi_minus[k] - pair.xi_plus[j]));
    term3 += u * inner;
  }
  term3 *= pair.grid_plus.step * pair.grid_minus.step / (4.0 * kPi * kPi);

  return req.g_at_x + term2 - term3 / (1.0 - q);
}

// Digital barrier request G = 1_(-inf, a1], h = a2: same integrals as the
// joint cpdf, used as an internal cross-check.
inline BarrierRequest digital_barrier(double a1, double a2, double x) {
  BarrierRequest r;
  r.h = a2;
  r.x = x;
  const cx i(0.0, 1.0);
  r.payoff_transform = [a1, i](cx xi) { return std::exp(-i * a1 * xi) / (-i * xi); };
  r.g_at_x = x <= a1 ? 1.0 : 0.0;
  r.deform_up = (x - a1 > 0.0);
  r.residue_add = [](cx q) { return q / (1.0 - q); };
  return r;
}

struct ExchangeRequest {
  double beta;
  double x1, x2;
};

// Wings-down contour with apex between mu_minus and -beta, used as the outer
// integration contour of the exchange-claim transform.
struct LowContour {
  SinhMap map;
  TrapezoidGrid grid{1.0, 1, false};
  int half = 0;
  std::vector<cx> xi, der, phi_vals;

  int size() const { return 2 * half + 1; }
};

inline LowContour build_low_contour(const Model& model, const ContourPair& pair,
                                    double beta) {
  const StripBounds& strip = pair.strip;
  if (!(strip.mu_minus < -beta))
    throw StripViolation("exchange: model strip must satisfy mu_minus < -beta");
  LowContour low;
  double apex = 0.5 * (strip.mu_minus - beta);
  double gap = (-beta - strip.mu_minus) / 8.0;
  double omega = pair.map_minus.omega;
  double d = 0.5 * std::min(kPi / 2.0 - std::abs(omega), std::abs(omega));
  double b = (-beta - gap - apex) / (std::sin(omega + d) - std::sin(omega));
  double om1 = apex - b * std::sin(omega);
  low.map = SinhMap(cx(0.0, om1), b, omega);
  low.grid = TrapezoidGrid(pair.grid_minus.step, pair.n_minus, false);
  low.half = pair.n_minus;
  low.xi = whf_detail::sample_points(low.map, low.grid.step, low.half);
  low.der = whf_detail::sample_derivs(low.map, low.grid.step, low.half);
  low.phi_vals.resize(low.xi.size());
  for (size_t k = 0; k < low.xi.size(); ++k) low.phi_vals[k] = model.phi(low.xi[k]);
  return low;
}

// Transform of the option exchanging e^{x2 + max} for e^{beta(x1 + X_n)}.
// Sinh realization of the three-integral representation; requires x2 = 0
// (integrands lose wing decay otherwise) and flattening constants attached.
inline cx exchange_tilde(cx q, const ExchangeRequest& req, const WhfFactors& whf,
                         const Workspace& ws, const LowContour& low) {
  if (!(req.beta > 1.0)) throw Error("exchange_tilde: need beta > 1");
  if (!(req.x1 <= req.x2)) throw Error("exchange_tilde: need x1 <= x2");
  if (req.x2 != 0.0)
    throw Error("exchange_tilde: sinh realization supports x2 = 0 only");
  if (!whf.has_constants) throw Error("exchange_tilde: flattening constants not attached");
  const ContourPair& pair = ws.pair;
  const cx i(0.0, 1.0);
  const double beta = req.beta, x1 = req.x1, x2 = req.x2;

  std::vector<cx> phi_minus_low = factor_minus(q, low.xi, pair);
  std::vector<cx> phi_plus_low = factor_via_identity(q, phi_minus_low, low.phi_vals);

  // I2 vanishes identically at x2 = 0 (the payoff transform is the integral
  // over an empty interval); keep the bracket for reference.
  cx i2(0.0, 0.0);

  // w0(y) = 1_{y >= x2} (e^{beta y} - e^y)_+ , transform analytic below -beta
  cx i3(0.0, 0.0);
  for (int k = 0; k < low.size(); ++k) {
    cx eta = low.xi[k];
    cx w0h = std::exp((beta - i * eta) * x2) / (i * eta - beta) -
             std::exp((1.0 - i * eta) * x2) / (i * eta - 1.0);
    i3 += std::exp(i * x1 * eta) * (phi_plus_low[k] - whf.c_plus) * w0h * low.der[k];
  }
  i3 *= whf.c_minus * low.grid.step / (2.0 * kPi);

  // xi-only pieces of the inner integrand
  const int np = pair.size_plus();
  std::vector<cx> base_j(np), mid_j(np), last_j(np);
  for (int j = 0; j < np; ++j) {
    cx xi = pair.xi_plus[j];
    cx mm = whf.phi_minus_on_plus[j] - whf.c_minus;
    base_j[j] = std::exp(-i * x2 * xi) * mm * pair.der_plus[j];
    mid_j[j] = beta * std::exp((1.0 + i * xi * (1.0 - 1.0 / beta)) * x2) *
               (1.0 - i * xi / beta) / ((beta - i * xi) * (-i * xi));
    last_j[j] = std::exp(x2) * (1.0 - i * xi) / (-i * xi);
  }
  cx i4(0.0, 0.0);
  for (int k = 0; k < low.size(); ++k) {
    cx eta = low.xi[k];
    cx t1 = std::exp(beta * x2) / (i * eta - beta);
    cx t3d = 1.0 / (i * eta - 1.0);
    cx inner(0.0, 0.0);
    for (int j = 0; j < np; ++j) {
      cx xi = pair.xi_plus[j];
      cx bracket = t1 + mid_j[j] / (i * eta - 1.0 - i * xi * (1.0 - 1.0 / beta)) -
                   last_j[j] * t3d;
      inner += base_j[j] / (i * (eta - xi)) * bracket;
    }
    i4 += std::exp(i * (x1 - x2) * eta) * (phi_plus_low[k] - whf.c_plus) * low.der[k] * inner;
  }
  i4 *= low.grid.step * pair.grid_plus.step / (4.0 * kPi * kPi);

  double intrinsic = std::max(std::exp(beta * x1) - std::exp(x2), 0.0);
  return intrinsic + i2 + (i3 + i4) / (1.0 - q);
}

// Caller-supplied transforms for the generic four-term representation.
struct GenericTransforms {
  double payoff_value = 0.0;
  std::function<cx(cx)> fhat1;             // (f̂+)_1(xi1, x2) as a function of xi1
  bool t2_deform_up = true;
  std::function<cx(cx)> t2_extra;          // q -> residue constant (nullable)
  std::function<cx(cx)> w0hat;             // eta -> ŵ0_1(eta, x2) (nullable)
  std::function<cx(cx, cx)> inner_reduced; // (eta, xi1) -> inner integrand / phi-- (nullable)
  std::function<cx(cx, cx)> fhat2;         // (xi1, xi2) -> f̂+(xi1, xi2) (nullable)
  double x1 = 0.0, x2 = 0.0;
};

// View of the wings-down outer contour together with phi+ values on it.
struct OuterView {
  const std::vector<cx>* xi;
  const std::vector<cx>* der;
  double zeta;
  std::vector<cx> phi_plus;
};

inline OuterView outer_from_pair(const WhfFactors& whf, const Workspace& ws) {
  OuterView o;
  o.xi = &ws.pair.xi_minus;
  o.der = &ws.pair.der_minus;
  o.zeta = ws.pair.grid_minus.step;
  o.phi_plus = whf.phi_plus_on_minus;
  return o;
}

inline OuterView outer_from_low(cx q, const LowContour& low, const ContourPair& pair) {
  OuterView o;
  o.xi = &low.xi;
  o.der = &low.der;
  o.zeta = low.grid.step;
  auto pm = factor_minus(q, low.xi, pair);
  o.phi_plus = factor_via_identity(q, pm, low.phi_vals);
  return o;
}

// Four-term representation: payoff + 1D term + c-_q w0-term + double term.
// The inner integral runs over L+; the reduced path takes a caller-supplied
// closed form, otherwise the f̂1 piece plus (optionally) the genuine 2D piece
// over a decimated L- grid in xi2.
inline cx generic_tilde(cx q, const GenericTransforms& tr, const WhfFactors& whf,
                        const Workspace& ws, const OuterView& outer) {
  if (!whf.has_constants) throw Error("generic_tilde: flattening constants not attached");
  const ContourPair& pair = ws.pair;
  const cx i(0.0, 1.0);
  auto fused = [](cx a, cx b) {
    cx v = a * b;
    return finite(v) ? v : cx(0.0, 0.0);  // underflowed tail of an admissible transform
  };

  cx t2(0.0, 0.0);
  {
    const auto& xi = tr.t2_deform_up ? pair.xi_plus : pair.xi_minus;
    const auto& der = tr.t2_deform_up ? pair.der_plus : pair.der_minus;
    const auto& phv = tr.t2_deform_up ? pair.phi_plus_vals : pair.phi_minus_vals;
    double zeta = tr.t2_deform_up ? pair.grid_plus.step : pair.grid_minus.step;
    for (size_t k = 0; k < xi.size(); ++k) {
      cx qphi = q * phv[k];
      t2 += fused(std::exp(i * tr.x1 * xi[k]), tr.fhat1(xi[k])) * qphi / (1.0 - qphi) * der[k];
    }
    t2 *= zeta / (2.0 * kPi);
    if (!tr.t2_deform_up && tr.t2_extra) t2 += tr.t2_extra(q);
  }

  const auto& oxi = *outer.xi;
  const auto& oder = *outer.der;

  cx t3(0.0, 0.0);
  if (tr.w0hat) {
    for (size_t k = 0; k < oxi.size(); ++k) {
      t3 += std::exp(i * tr.x1 * oxi[k]) * (outer.phi_plus[k] - whf.c_plus) *
            tr.w0hat(oxi[k]) * oder[k];
    }
    t3 *= whf.c_minus * outer.zeta / (2.0 * kPi * (1.0 - q));
  }

  cx t4(0.0, 0.0);
  {
    // For the genuine 2D piece the xi2 integral must keep Im(xi1+xi2-eta)
    // positive, which a wings-down contour cannot do; it runs on a straight
    // line inside the lower strip instead. Decay there is only O(1/|xi2|),
    // so this route is a slow fallback next to the reduced inner transforms.
    const double om2 = 0.5 * pair.strip.mu_minus;
    const double zeta2 = 0.1;
    const int n2 = 1500;
    const int stride1 = 12;  // xi1 decimation for the slow 2D fallback
    for (size_t k = 0; k < oxi.size(); ++k) {
      cx eta = oxi[k];
      cx w0m(0.0, 0.0);
      if (tr.inner_reduced) {
        for (int j = 0; j < pair.size_plus(); ++j) {
          cx mm = whf.phi_minus_on_plus[j] - whf.c_minus;
          w0m += tr.inner_reduced(eta, pair.xi_plus[j]) * mm * pair.der_plus[j];
        }
        w0m *= pair.grid_plus.step / (2.0 * kPi);
      } else {
        for (int j = 0; j < pair.size_plus(); ++j) {
          cx xi1 = pair.xi_plus[j];
          cx mm = whf.phi_minus_on_plus[j] - whf.c_minus;
          w0m += fused(std::exp(i * tr.x2 * xi1), tr.fhat1(xi1)) / (i * (xi1 - eta)) * mm *
                 pair.der_plus[j];
        }
        w0m *= pair.grid_plus.step / (2.0 * kPi);
        if (tr.fhat2) {
          cx p2(0.0, 0.0);
          for (int j = 0; j < pair.size_plus(); j += stride1) {
            cx xi1 = pair.xi_plus[j];
            cx mm = whf.phi_minus_on_plus[j] - whf.c_minus;
            cx two(0.0, 0.0);
            for (int l = -n2; l <= n2; ++l) {
              cx xi2(l * zeta2, om2);
              cx num = fused(std::exp(i * tr.x2 * (xi1 + xi2)), tr.fhat2(xi1, xi2));
              if (num != cx(0.0, 0.0)) two += num / (i * (eta - xi1 - xi2));
            }
            p2 += two * mm * pair.der_plus[j];
          }
          w0m += p2 * (zeta2 / (2.0 * kPi)) * (pair.grid_plus.step * stride1 / (2.0 * kPi));
        }
      }
      t4 += std::exp(i * (tr.x1 - tr.x2) * eta) * (outer.phi_plus[k] - whf.c_plus) * w0m *
            oder[k];
    }
    t4 *= outer.zeta / (2.0 * kPi * (1.0 - q));
  }

  return tr.payoff_value + t2 + t3 + t4;
}

}  // namespace walkmax
