#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "walkmax/models.hpp"
#include "walkmax/wiener_hopf.hpp"

using namespace walkmax;
using Catch::Approx;

namespace {

struct Fixture {
  KoBoLModel model;
  StripBounds strip;
  ContourPair pair;
  CauchyKernels kernels;

  explicit Fixture(double nu, int n = 63, double tol = 1e-12)
      : model(nu, 1.0, -2.0, calibrate_c(nu, 1.0, -2.0, 0.1), 1.0 / 252.0),
        strip(strip_bounds(model, 1.0 - 0.5 / n)),
        pair(build_contour_pair(model, strip, tol)),
        kernels(build_kernels(pair)) {}
};

const Fixture& fx02() {
  static Fixture f(0.2);
  return f;
}

// Independent quadrature contour at a different tilt angle, strictly above L+
// (for phi-) or below L- (for phi+).
struct TestContour {
  SinhMap map;
  std::vector<cx> eta, der, phv;
  double zeta;
};

TestContour make_angled(const Fixture& f, bool above_plus) {
  const AnalyticityInfo info = f.model.analyticity();
  const SinhMap& base = above_plus ? f.pair.map_plus : f.pair.map_minus;
  double gamma_side = above_plus ? info.gamma_plus : info.gamma_minus;
  double om = base.omega + 0.5 * (gamma_side - base.omega);
  double apex = above_plus ? 0.75 * f.strip.mu_plus : 0.75 * f.strip.mu_minus;
  double b = base.b;
  TestContour t;
  t.map = SinhMap(cx(0.0, apex - b * std::sin(om)), b, om);
  t.zeta = above_plus ? f.pair.grid_plus.step : f.pair.grid_minus.step;
  int half = (above_plus ? f.pair.n_plus : f.pair.n_minus) + 400;
  t.eta = whf_detail::sample_points(t.map, t.zeta, half);
  t.der = whf_detail::sample_derivs(t.map, t.zeta, half);
  t.phv.resize(t.eta.size());
  for (size_t i = 0; i < t.eta.size(); ++i) t.phv[i] = f.model.phi(t.eta[i]);
  return t;
}

double worst_identity_residual(const Fixture& f, cx q, int stride) {
  WhfFactors fac = compute_factors(q, f.pair, f.kernels);
  TestContour up = make_angled(f, true);
  TestContour down = make_angled(f, false);
  double worst = 0.0;
  // on L+: native phi+ against an independent phi- quadrature from above
  for (int j = 0; j < f.pair.size_plus(); j += stride) {
    std::vector<cx> one{f.pair.xi_plus[size_t(j)]};
    auto e = factor_exponent_over(q, one, up.map, up.eta, up.der, up.phv, up.zeta, false);
    cx resid = fac.phi_plus_on_plus[size_t(j)] * std::exp(e[0]) *
                   (1.0 - q * f.pair.phi_plus_vals[size_t(j)]) -
               (1.0 - q);
    worst = std::max(worst, std::abs(resid) / std::abs(1.0 - q));
  }
  // on L-: native phi- against an independent phi+ quadrature from below
  for (int k = 0; k < f.pair.size_minus(); k += stride) {
    std::vector<cx> one{f.pair.xi_minus[size_t(k)]};
    auto e = factor_exponent_over(q, one, down.map, down.eta, down.der, down.phv,
                                  down.zeta, true);
    cx resid = fac.phi_minus_on_minus[size_t(k)] * std::exp(e[0]) *
                   (1.0 - q * f.pair.phi_minus_vals[size_t(k)]) -
               (1.0 - q);
    worst = std::max(worst, std::abs(resid) / std::abs(1.0 - q));
  }
  return worst;
}

}  // namespace

TEST_CASE("factor limits at q -> 0 and xi -> 0") {
  const Fixture& f = fx02();
  cx q(1e-14, 0.0);
  WhfFactors fac = compute_factors(q, f.pair, f.kernels);
  for (int j = 0; j < f.pair.size_plus(); j += 100)
    REQUIRE(std::abs(fac.phi_plus_on_plus[size_t(j)] - 1.0) < 1e-10);
  for (int k = 0; k < f.pair.size_minus(); k += 100)
    REQUIRE(std::abs(fac.phi_minus_on_minus[size_t(k)] - 1.0) < 1e-10);

  // the integrand carries a factor xi, so the factor at 0 is exactly 1
  std::vector<cx> zero{cx(0.0)};
  auto fp = factor_plus(cx(0.5), zero, f.pair);
  auto fm = factor_minus(cx(0.5), zero, f.pair);
  REQUIRE(fp[0] == cx(1.0));
  REQUIRE(fm[0] == cx(1.0));
}

TEST_CASE("factorization identity against independent quadratures") {
  const Fixture& f = fx02();
  for (cx q : {cx(0.97, 0.0), cx(0.999, 0.02), cx(0.9, -0.4)})
    REQUIRE(worst_identity_residual(f, q, 37) < 1e-12);
}

TEST_CASE("identity transfer is an involution") {
  const Fixture& f = fx02();
  cx q(0.93, -0.1);
  WhfFactors fac = compute_factors(q, f.pair, f.kernels);
  auto back = factor_via_identity(q, fac.phi_plus_on_minus, f.pair.phi_minus_vals);
  for (int k = 0; k < f.pair.size_minus(); k += 50)
    REQUIRE(std::abs(back[size_t(k)] - fac.phi_minus_on_minus[size_t(k)]) <
            1e-14 * (1.0 + std::abs(back[size_t(k)])));

  std::vector<cx> ones(f.pair.xi_minus.size(), cx(1.0));
  auto id0 = factor_via_identity(cx(0.0), ones, f.pair.phi_minus_vals);
  for (cx v : id0) REQUIRE(v == cx(1.0));
}

TEST_CASE("flattening constants") {
  const Fixture& f = fx02();
  REQUIRE(std::abs(constant_cpm(cx(0.0), f.pair, +1) - 1.0) == 0.0);
  REQUIRE(std::abs(constant_cpm(cx(0.0), f.pair, -1) - 1.0) == 0.0);

  for (cx q : {cx(0.5, 0.0), cx(0.97, 0.0), cx(0.9, 0.3)}) {
    cx cp = constant_cpm(q, f.pair, +1);
    cx cm = constant_cpm(q, f.pair, -1);
    // with Phi decaying inside the strip, the factor product flattens to 1-q
    REQUIRE(std::abs(cp * cm - (1.0 - q)) < 1e-12 * std::abs(1.0 - q));

    // large-|xi| flattening of the native factor toward c+
    WhfFactors fac = compute_factors(q, f.pair, f.kernels);
    int n = f.pair.n_plus;
    double far = std::abs(fac.phi_plus_on_plus[size_t(2 * n)] - cp);
    double mid = std::abs(fac.phi_plus_on_plus[size_t(n + (2 * n - n) / 2)] - cp);
    double near = std::abs(fac.phi_plus_on_plus[size_t(n + 50)] - cp);
    REQUIRE(far < mid);
    REQUIRE(mid < near);
    REQUIRE(far < 1e-6);
  }
}

TEST_CASE("straight-line factor oracle (fast-decay model)") {
  // nu = 1.2 decays fast enough for an undeformed line quadrature
  Fixture f(1.2);
  cx q(0.8, 0.0);
  cx xi = f.pair.xi_plus[size_t(f.pair.n_plus + 40)];

  double om_line = 0.5 * f.strip.mu_minus;
  double zeta = 0.004;
  long half = 2000000;
  cx acc(0.0);
  for (long k = -half; k <= half; ++k) {
    cx eta(k * zeta, om_line);
    cx lf = -clog1p(q * (1.0 - f.model.phi(eta)) / (1.0 - q));
    acc += xi * lf / (eta * (xi - eta));
  }
  cx line_phi_plus = std::exp(cx(0.0, 1.0) * (zeta / (2.0 * kPi)) * acc);

  // the undeformed line converges only like 1/T, which is the point of
  // deforming in the first place; the oracle pins structure, not digits
  std::vector<cx> one{xi};
  auto deformed = factor_plus(q, one, f.pair);
  REQUIRE(std::abs(deformed[0] - line_phi_plus) < 5e-4 * std::abs(line_phi_plus));
}

TEST_CASE("quadrature convergence certificate") {
  const Fixture& f = fx02();
  ContourOverrides ov;
  ov.n_plus = 2 * f.pair.n_plus;
  ov.n_minus = 2 * f.pair.n_minus;
  ContourPair wide = build_contour_pair(f.model, f.strip, 1e-12, ov);
  CauchyKernels wk = build_kernels(wide);
  cx q(0.97, -0.05);
  WhfFactors a = compute_factors(q, f.pair, f.kernels);
  WhfFactors b = compute_factors(q, wide, wk);
  int off_p = wide.n_plus - f.pair.n_plus;
  int off_m = wide.n_minus - f.pair.n_minus;
  double worst = 0.0;
  for (int j = 0; j < f.pair.size_plus(); j += 13)
    worst = std::max(worst, std::abs(a.phi_plus_on_plus[size_t(j)] -
                                     b.phi_plus_on_plus[size_t(j + off_p)]));
  for (int k = 0; k < f.pair.size_minus(); k += 13)
    worst = std::max(worst, std::abs(a.phi_minus_on_minus[size_t(k)] -
                                     b.phi_minus_on_minus[size_t(k + off_m)]));
  REQUIRE(worst < 1e-12);
}

TEST_CASE("deformation certification") {
  const Fixture& f = fx02();
  std::vector<cx> zero_q = {cx(0.0)};
  CertReport r0 = certify_deformation(zero_q, f.pair, f.model);
  REQUIRE(r0.ok);
  REQUIRE(r0.max_abs_fraction == Approx(1.0));

  // table-style grid (real crossing inside the unit disc) certifies with a
  // visible margin
  std::vector<cx> qs;
  for (int j = 0; j <= 25; ++j)
    qs.push_back(zplane_point(SinhMap(cx(0.9177, 0.0), 0.0845, -0.6883), cx(0.1412 * j, 0.0)));
  CertReport r1 = certify_deformation(qs, f.pair, f.model);
  REQUIRE(r1.ok);
  REQUIRE(r1.min_distance > 1e-4);

  // real q just past 1/Phi at the L- apex pushes the fraction onto the cut
  cx apex = f.pair.map_minus.shift + cx(0.0, f.pair.map_minus.b * std::sin(f.pair.map_minus.omega));
  double qstar = 1.0 / std::abs(f.model.phi(apex));
  std::vector<cx> bad = {cx(qstar * (1.0 + 1e-9), 0.0)};
  CertReport r2 = certify_deformation(bad, f.pair, f.model);
  REQUIRE_FALSE(r2.ok);
  REQUIRE_THROWS_AS(require_certified(r2), DeformationInvalid);
}

TEST_CASE("kernel matrices") {
  const Fixture& f = fx02();
  for (int j = 0; j < f.pair.size_plus(); j += 97)
    for (int k = 0; k < f.pair.size_minus(); k += 101) {
      REQUIRE(f.kernels.dp(j, k) == -f.kernels.dm(k, j));
      REQUIRE(std::abs(f.kernels.dp(j, k) *
                       (f.pair.xi_plus[size_t(j)] - f.pair.xi_minus[size_t(k)]) -
                       1.0) < 1e-14);
    }
}
