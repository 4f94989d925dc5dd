#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "walkmax/complexops.hpp"
#include "walkmax/models.hpp"
#include "walkmax/valuation.hpp"
#include "walkmax/wiener_hopf.hpp"
#include "walkmax/zinv.hpp"

namespace walkmax {

enum class Mode { Auto, Sinh, Trapezoid };

struct EngineConfig {
  Mode mode = Mode::Auto;
  double tol = 1e-10;
  int m0_override = 0;
  int n_plus_override = 0;
  int n_minus_override = 0;
  double trap_multiplier = 1.0;
  int workers = 0;  // 0: WALKMAX_WORKERS env or hardware concurrency
  bool short_valuation_grids = false;
  double cert_margin = 1e-6;
};

struct Request {
  enum class Kind { Cpdf, NoTouch, BarrierDigital, Exchange } kind = Kind::Cpdf;
  double a1 = 0.0, a2 = 0.0, x1 = 0.0, x2 = 0.0, beta = 0.0, h = 0.0;
};

struct ResultRow {
  Request req;
  double value = 0.0;
  double imag_residual = 0.0;
  bool ok = true;
  std::string error;
};

struct RunDiagnostics {
  Mode mode_used = Mode::Sinh;
  int m0 = 0;
  int n_plus = 0, n_minus = 0;
  double cert_min_distance = 0.0;
  double millis = 0.0;
  double gamma_q = 0.0;
  double case_iii_scale = 1.0;
};

struct RunPlan {
  int n_steps = 0;
  ZInversionPlan z_plan;
  ContourPair pair;
  CauchyKernels kernels;
  ValuationRange range;
  double tol = 1e-10;
  std::vector<Request> requests;
  CertReport cert;
  bool needs_constants = false;
  std::optional<LowContour> low;
  double case_iii_scale = 1.0;  // A factored out by the z = A z' substitution
  double gamma_q = 0.0;
  Mode mode_used = Mode::Sinh;
};

namespace engine_detail {

inline int worker_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("WALKMAX_WORKERS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : int(hc);
}

template <typename F>
inline void parallel_for(int count, int workers, F&& body) {
  workers = std::min(workers, count);
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next(0);
  std::exception_ptr first_error;
  std::mutex err_mutex;
  auto task = [&]() {
    for (;;) {
      int i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lk(err_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) pool.emplace_back(task);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

// Cone parameter of the disc-plane singularity set {1/Phi(xi)}: the largest
// argument among reachable singularities caps how far the inversion contour
// may rotate away from the positive axis.
inline double estimate_gamma_q(const Model& model, const ContourPair& pair, double q_cap) {
  double delta = 0.0;
  double log_cap = std::log(q_cap);
  for (int side = 0; side < 2; ++side) {
    const auto& xi = side == 0 ? pair.xi_plus : pair.xi_minus;
    int stride = std::max<size_t>(1, xi.size() / 513);
    for (size_t j = 0; j < xi.size(); j += stride) {
      cx dtpsi = model.dt() * model.psi(xi[j]);
      if (dtpsi.real() <= log_cap)  // |1/Phi| = e^{dt Re psi} within reach
        delta = std::max(delta, std::abs(dtpsi.imag()));
    }
  }
  double gamma = kPi - delta - 0.05;
  return std::min(gamma, 0.98 * kPi);
}

inline double request_decay_scale(const std::vector<Request>& reqs) {
  double w = 1e9;
  for (const auto& r : reqs) {
    switch (r.kind) {
      case Request::Kind::Cpdf:
        if (r.a1 != r.a2) w = std::min({w, r.a2 - r.x1, r.a2 - r.a1});
        else w = std::min(w, r.a2 - r.x1);
        break;
      case Request::Kind::NoTouch:
        w = std::min(w, r.a2 - r.x1);
        break;
      case Request::Kind::BarrierDigital:
        w = std::min({w, r.h - r.x1, r.h - r.a1});
        break;
      case Request::Kind::Exchange:
        w = 0.0;  // exchange integrals use the full grids
        break;
    }
  }
  return w;
}

inline int valuation_half(const SinhMap& m, double zeta, int n_half, double w,
                          double target_log) {
  if (w <= 1e-9) return n_half;
  double s = m.b * std::abs(std::sin(m.omega));
  double arg = std::max(1.0, target_log / (w * std::max(s, 1e-12)));
  double ystar = std::acosh(arg) + 1.0;
  return std::min(n_half, int(std::ceil(ystar / zeta)));
}

}  // namespace engine_detail

// Sinh inversion when the certified disc-plane cone allows it (and the model
// has no one-sided-cone drift obstruction); trapezoid otherwise. Small n runs
// the trapezoid rule, which is already cheap there.
inline Mode select_mode(const Model& model, int n, double /*tol*/) {
  AnalyticityInfo info = model.analyticity();
  if (info.gamma_minus == 0.0 || info.gamma_plus == 0.0) return Mode::Trapezoid;
  if (n < 16) return Mode::Trapezoid;
  return Mode::Sinh;
}

inline RunPlan build_run_plan(const Model& model, double maturity_years,
                              const std::vector<Request>& requests,
                              const EngineConfig& cfg) {
  RunPlan plan;
  double n_real = maturity_years / model.dt();
  plan.n_steps = int(std::llround(n_real));
  if (std::abs(n_real - plan.n_steps) > 1e-9 * std::max(1.0, n_real) || plan.n_steps < 0)
    throw Error("build_run_plan: T / dt must be an integer number of steps");
  int n = std::max(plan.n_steps, 1);
  plan.tol = cfg.tol;
  plan.requests = requests;

  // growth data of Ṽ and the analyticity radius along the positive axis
  double c_tv = 1.0, a_tv = 0.0, a_bound = 1.0;
  plan.needs_constants = false;
  for (const auto& r : requests) {
    if (r.kind == Request::Kind::Exchange) {
      plan.needs_constants = true;
      a_bound = std::min(a_bound, std::exp(model.dt() * model.psi(cx(0.0, -r.beta)).real()));
      c_tv = std::max(c_tv, 2.0);
    }
  }

  Mode mode = cfg.mode == Mode::Auto ? select_mode(model, n, cfg.tol) : cfg.mode;
  plan.mode_used = mode;

  double q_hat = std::min(1.0 - 0.5 / n, 0.999999);
  StripBounds strip = strip_bounds(model, q_hat);

  ContourOverrides cov;
  cov.n_plus = cfg.n_plus_override;
  cov.n_minus = cfg.n_minus_override;
  plan.pair = build_contour_pair(model, strip, cfg.tol, cov);
  plan.kernels = build_kernels(plan.pair);

  if (mode == Mode::Sinh) {
    plan.gamma_q = engine_detail::estimate_gamma_q(model, plan.pair, 4.0);
    double tol_z = plan.tol;
    if (a_bound < 1.0 - 1e-12) {
      // Case III: invert Ṽ(A z') on the unit-normalized variable
      plan.case_iii_scale = a_bound;
      ZInversionPlan draft = build_trapezoid_plan(n, plan.tol);  // placeholder tol carrier
      draft.tol = plan.tol;
      tol_z = rescale_case_iii(draft, a_bound, n, a_tv).tol_scaled;
    }
    try {
      plan.z_plan = build_plan(plan.gamma_q, plan.case_iii_scale < 1.0 ? 1.0 : a_bound, n,
                               tol_z, c_tv, a_tv);
    } catch (const GammaTooSmall&) {
      mode = Mode::Trapezoid;
      plan.mode_used = mode;
    }
    if (mode == Mode::Sinh && cfg.m0_override > 0) {
      plan.z_plan.grid = TrapezoidGrid(plan.z_plan.grid.step, cfg.m0_override, true);
    }
  }
  if (mode == Mode::Trapezoid) {
    plan.z_plan = build_trapezoid_plan(n, cfg.tol, cfg.trap_multiplier);
    if (a_bound < 1.0) plan.z_plan.radius = std::min(plan.z_plan.radius, 0.97 * a_bound);
    if (cfg.m0_override > 0) plan.z_plan.m_total = 2 * cfg.m0_override + 1;
  }

  // valuation windows for the bilinear terms
  plan.range = Workspace::full(plan.pair, plan.kernels).range;
  if (cfg.short_valuation_grids) {
    double w = engine_detail::request_decay_scale(requests);
    double target = std::log(10.0 / std::max(cfg.tol * 1e-2, 1e-15));
    int vp = engine_detail::valuation_half(plan.pair.map_plus, plan.pair.grid_plus.step,
                                           plan.pair.n_plus, w, target);
    int vm = engine_detail::valuation_half(plan.pair.map_minus, plan.pair.grid_minus.step,
                                           plan.pair.n_minus, w, target);
    plan.range.lo_plus = plan.pair.n_plus - vp;
    plan.range.hi_plus = plan.pair.n_plus + vp;
    plan.range.lo_minus = plan.pair.n_minus - vm;
    plan.range.hi_minus = plan.pair.n_minus + vm;
  }

  for (const auto& r : requests)
    if (r.kind == Request::Kind::Exchange) {
      plan.low = build_low_contour(model, plan.pair, r.beta);
      break;
    }

  // certification runs on the q values actually evaluated
  std::vector<cx> q_eval = plan_qgrid(plan.z_plan);
  if (plan.case_iii_scale < 1.0)
    for (auto& q : q_eval) q *= plan.case_iii_scale;
  plan.cert = certify_deformation(q_eval, plan.pair, model, cfg.cert_margin);
  require_certified(plan.cert);
  if (plan.low) {
    // same fraction sweep over the exchange outer contour
    const LowContour& lc = *plan.low;
    int stride = std::max(1, lc.size() / 257);
    for (int k = 0; k < lc.size(); k += stride)
      for (cx q : q_eval) {
        cx w = (1.0 - q) / (1.0 - q * lc.phi_vals[size_t(k)]);
        if (dist_to_neg_ray(w) < cfg.cert_margin || !finite(w))
          throw DeformationInvalid("low-contour certification failed", q, lc.xi[size_t(k)],
                                   dist_to_neg_ray(w));
      }
  }
  return plan;
}

// Main block: factors once per q, shared across requests; deterministic
// sequential reduction over the inversion grid.
inline std::vector<ResultRow> run(const Model& model, const RunPlan& plan,
                                  const EngineConfig& cfg, RunDiagnostics* diag = nullptr) {
  auto t0 = std::chrono::steady_clock::now();
  const int nq = plan.z_plan.mode == ZMode::Sinh ? plan.z_plan.grid.half_count + 1
                                                 : (plan.z_plan.m_total - 1) / 2 + 1;
  std::vector<cx> q_eval = plan_qgrid(plan.z_plan);
  if (plan.case_iii_scale < 1.0)
    for (auto& q : q_eval) q *= plan.case_iii_scale;

  const size_t nr = plan.requests.size();
  std::vector<cx> vals(size_t(nq) * std::max<size_t>(nr, 1));
  std::vector<std::string> row_errors(nr);

  Workspace ws{plan.pair, plan.kernels, plan.range};
  const cx i(0.0, 1.0);

  // distinct (x1, a2) pairs for grouped bilinear sums
  std::vector<std::pair<double, double>> groups;
  for (const auto& r : plan.requests)
    if (r.kind == Request::Kind::Cpdf && r.a1 != r.a2 && r.x2 <= r.a2) {
      std::pair<double, double> key{r.x1, r.a2};
      bool seen = false;
      for (const auto& g : groups) seen = seen || g == key;
      if (!seen) groups.push_back(key);
    }

  int workers = engine_detail::worker_count(cfg.workers);
  FactorWindow fwin;
  fwin.lo_plus = plan.range.lo_plus;
  fwin.hi_plus = plan.range.hi_plus;
  fwin.lo_minus = plan.range.lo_minus;
  fwin.hi_minus = plan.range.hi_minus;

  engine_detail::parallel_for(nq, workers, [&](int jq) {
    cx q = q_eval[jq];
    WhfFactors f = compute_factors(q, plan.pair, plan.kernels, fwin);
    if (plan.needs_constants) attach_constants(f, plan.pair);

    // grouped w-vectors: w_j(x1, a2) = sum_k dp(j,k) u_k over the windows
    const auto& pair = plan.pair;
    std::vector<std::vector<cx>> wvec(groups.size());
    for (size_t ia = 0; ia < groups.size(); ++ia) {
      double x1 = groups[ia].first, a2 = groups[ia].second;
      std::vector<cx> u(plan.range.hi_minus - plan.range.lo_minus + 1);
      for (int k = plan.range.lo_minus; k <= plan.range.hi_minus; ++k)
        u[k - plan.range.lo_minus] = std::exp(i * (x1 - a2) * pair.xi_minus[k]) *
                                     f.phi_plus_on_minus[k] * pair.der_minus[k];
      auto& w = wvec[ia];
      w.resize(plan.range.hi_plus - plan.range.lo_plus + 1);
      for (int j = plan.range.lo_plus; j <= plan.range.hi_plus; ++j) {
        cx acc(0.0, 0.0);
        for (int k = plan.range.lo_minus; k <= plan.range.hi_minus; ++k)
          acc += ws.kernels.dp(j, k) * u[k - plan.range.lo_minus];
        w[j - plan.range.lo_plus] = acc;
      }
    }

    for (size_t r = 0; r < nr; ++r) {
      const Request& rq = plan.requests[r];
      cx v(0.0, 0.0);
      try {
        switch (rq.kind) {
          case Request::Kind::Cpdf: {
            if (rq.x2 > rq.a2) { v = 0.0; break; }
            if (rq.a1 == rq.a2) {
              v = no_touch_tilde(q, rq.a2, rq.x1, f, ws);
              break;
            }
            size_t ia = 0;
            while (ia < groups.size() &&
                   !(groups[ia].first == rq.x1 && groups[ia].second == rq.a2))
              ++ia;
            cx base;
            cx one_d = val_detail::cpdf_one_d(q, rq.x1, rq.a1, pair, &base);
            cx int2(0.0, 0.0);
            const auto& w = wvec[ia];
            for (int j = plan.range.lo_plus; j <= plan.range.hi_plus; ++j) {
              cx vv = std::exp(i * (rq.a2 - rq.a1) * pair.xi_plus[j]) *
                      f.phi_minus_on_plus[j] * pair.der_plus[j] / pair.xi_plus[j];
              int2 += vv * w[j - plan.range.lo_plus];
            }
            int2 *= pair.grid_plus.step * pair.grid_minus.step / (4.0 * kPi * kPi);
            v = base + one_d + int2 / (1.0 - q);
            break;
          }
          case Request::Kind::NoTouch:
            v = no_touch_tilde(q, rq.a2, rq.x1, f, ws);
            break;
          case Request::Kind::BarrierDigital:
            v = barrier_tilde(q, digital_barrier(rq.a1, rq.h, rq.x1), f, ws);
            break;
          case Request::Kind::Exchange: {
            ExchangeRequest er{rq.beta, rq.x1, rq.x2};
            v = exchange_tilde(q, er, f, ws, *plan.low);
            break;
          }
        }
      } catch (const std::exception& e) {
        row_errors[r] = e.what();
        v = cx(std::numeric_limits<double>::quiet_NaN(), 0.0);
      }
      vals[size_t(jq) * nr + r] = v;
    }
  });

  std::vector<ResultRow> rows(nr);
  int n = plan.n_steps;
  double scale = plan.case_iii_scale < 1.0 ? std::pow(plan.case_iii_scale, -double(n)) : 1.0;
  for (size_t r = 0; r < nr; ++r) {
    rows[r].req = plan.requests[r];
    if (!row_errors[r].empty()) {
      rows[r].ok = false;
      rows[r].error = row_errors[r];
      rows[r].value = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    std::vector<cx> column(nq);
    for (int jq = 0; jq < nq; ++jq) column[jq] = vals[size_t(jq) * nr + r];
    double resid = 0.0;
    rows[r].value = scale * invert_samples(plan.z_plan, n, column, &resid);
    rows[r].imag_residual = scale * resid;
  }

  if (diag) {
    diag->mode_used = plan.mode_used;
    diag->m0 = plan.z_plan.mode == ZMode::Sinh ? plan.z_plan.grid.half_count
                                               : (plan.z_plan.m_total - 1) / 2;
    diag->n_plus = plan.pair.n_plus;
    diag->n_minus = plan.pair.n_minus;
    diag->cert_min_distance = plan.cert.min_distance;
    diag->gamma_q = plan.gamma_q;
    diag->case_iii_scale = plan.case_iii_scale;
    diag->millis = std::chrono::duration<double, std::milli>(
        std::chrono::steady_clock::now() - t0).count();
  }
  return rows;
}

}  // namespace walkmax
