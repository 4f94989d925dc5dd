#pragma once

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "walkmax/errors.hpp"
#include "walkmax/models.hpp"

namespace walkmax {

// Lattice law of one walk increment: cell masses p[k] for positions k*h,
// k in [k_lo, k_hi]. Built as a compound-Poisson mixture of the cell-binned
// jump measure (valid for nu < 1, finite variation, no drift term); the
// sub-cell activity left in the central cell is far below lattice scale.
struct StepDensity {
  double h = 0.0;
  int k_lo = 0, k_hi = 0;
  std::vector<double> p;
  double mean = 0.0, var = 0.0;

  int size() const { return k_hi - k_lo + 1; }
  double mass(int k) const { return p[size_t(k - k_lo)]; }
};

namespace oracle_detail {

// In-place complex FFT via FFTW, fixed direction.
inline void fft(std::vector<double>& re, std::vector<double>& im, bool inverse) {
  int n = int(re.size());
  std::vector<fftw_complex> buf(n);
  for (int i = 0; i < n; ++i) {
    buf[i][0] = re[i];
    buf[i][1] = im[i];
  }
  fftw_plan plan = fftw_plan_dft_1d(n, buf.data(), buf.data(),
                                    inverse ? FFTW_BACKWARD : FFTW_FORWARD, FFTW_ESTIMATE);
  fftw_execute(plan);
  fftw_destroy_plan(plan);
  double scale = inverse ? 1.0 / n : 1.0;
  for (int i = 0; i < n; ++i) {
    re[i] = buf[i][0] * scale;
    im[i] = buf[i][1] * scale;
  }
}

inline int next_pow2(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Linear convolution of mass vectors; rigid offset bookkeeping is left to
// the caller (result index 0 corresponds to a_lo + b_lo).
inline std::vector<double> convolve(const std::vector<double>& a, const std::vector<double>& b) {
  int n = next_pow2(int(a.size() + b.size() - 1));
  std::vector<double> are(n, 0.0), aim(n, 0.0), bre(n, 0.0), bim(n, 0.0);
  std::copy(a.begin(), a.end(), are.begin());
  std::copy(b.begin(), b.end(), bre.begin());
  fft(are, aim, false);
  fft(bre, bim, false);
  for (int i = 0; i < n; ++i) {
    double r = are[i] * bre[i] - aim[i] * bim[i];
    double m = are[i] * bim[i] + aim[i] * bre[i];
    are[i] = r;
    aim[i] = m;
  }
  fft(are, aim, true);
  are.resize(a.size() + b.size() - 1);
  return are;
}

inline double simpson_cell(const std::function<double(double)>& f, double a, double b,
                           int segs = 8) {
  double s = f(a) + f(b);
  double dx = (b - a) / segs;
  for (int i = 1; i < segs; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * dx);
  return s * dx / 3.0;
}

}  // namespace oracle_detail

inline StepDensity build_step_density(const KoBoLModel& model, double h, double x_lo,
                                      double x_hi) {
  if (model.nu >= 1.0)
    throw Error("build_step_density: compound-Poisson binning needs nu < 1");
  if (!(h > 0.0) || !(x_lo < 0.0) || !(x_hi > 0.0))
    throw Error("build_step_density: bad grid parameters");

  StepDensity sd;
  sd.h = h;
  sd.k_lo = int(std::floor(x_lo / h));
  sd.k_hi = int(std::ceil(x_hi / h));
  int n = sd.size();

  const double c = model.c_intensity, nu = model.nu;
  const double lp = model.lambda_plus, lm = model.lambda_minus, dt = model.dt_;
  auto lev = [&](double x) {
    if (x > 0.0) return c * std::exp(lm * x) * std::pow(x, -1.0 - nu);
    return c * std::exp(lp * x) * std::pow(-x, -1.0 - nu);
  };

  // per-cell jump intensities; outermost cells absorb the tails
  std::vector<double> ell(n, 0.0);
  for (int k = sd.k_lo; k <= sd.k_hi; ++k) {
    if (k == 0) continue;
    double a = (k - 0.5) * h, b = (k + 0.5) * h;
    ell[size_t(k - sd.k_lo)] = dt * oracle_detail::simpson_cell(lev, a, b, 16);
  }
  // tails beyond the window, integrated on a stretched grid into the edge cells
  auto tail = [&](double from, double sign) {
    double total = 0.0, a = from;
    for (int blk = 0; blk < 4000; ++blk) {
      double b = a * 1.01 + 1e-6;
      total += oracle_detail::simpson_cell([&](double t) { return lev(sign * t); }, a, b, 4);
      a = b;
      if (lev(sign * a) * a < 1e-30) break;
    }
    return dt * total;
  };
  ell[size_t(sd.k_hi - sd.k_lo)] += tail((sd.k_hi + 0.5) * h, +1.0);
  ell[0] += tail(-(sd.k_lo - 0.5) * h, -1.0);

  double lambda_total = 0.0;
  for (double v : ell) lambda_total += v;

  // estimated mass that the window cannot represent at all (tail folded into
  // edge cells keeps conservation; this check guards the fold's coarseness)
  double edge_fold = ell[0] + ell[size_t(sd.k_hi - sd.k_lo)];
  if (edge_fold > 1e-3)
    throw TailMassError("build_step_density: too much jump mass beyond the window");

  // p = e^{-Lambda} sum_m ell^{*m} / m!, m <= 4 (remainder into the origin)
  std::vector<double> mix(n, 0.0);
  int origin = -sd.k_lo;
  double fact = 1.0;
  std::vector<double> cur = ell;  // re-centered onto the window after each power
  for (int m = 1; m <= 4; ++m) {
    fact *= m;
    if (m > 1) {
      auto full = oracle_detail::convolve(cur, ell);
      std::vector<double> clipped(n, 0.0);
      int off_lo = 2 * sd.k_lo;  // both operands live on the window
      for (size_t idx = 0; idx < full.size(); ++idx) {
        int k = off_lo + int(idx);
        int kk = std::clamp(k, sd.k_lo, sd.k_hi);
        clipped[size_t(kk - sd.k_lo)] += full[idx];
      }
      cur = clipped;
    }
    for (int j = 0; j < n; ++j) mix[j] += cur[j] / fact;
  }
  double pois = std::exp(-lambda_total);
  sd.p.assign(n, 0.0);
  for (int j = 0; j < n; ++j) sd.p[j] = pois * mix[j];
  sd.p[size_t(origin)] += pois;  // zero-jump term

  double total = 0.0;
  for (double v : sd.p) {
    if (v < -1e-8) throw TailMassError("build_step_density: negative cell mass");
    total += v;
  }
  sd.p[size_t(origin)] += 1.0 - total;  // Poisson remainder m >= 5

  for (int j = 0; j < n; ++j) {
    double x = (sd.k_lo + j) * h;
    sd.mean += x * sd.p[j];
  }
  for (int j = 0; j < n; ++j) {
    double x = (sd.k_lo + j) * h;
    sd.var += (x - sd.mean) * (x - sd.mean) * sd.p[j];
  }
  return sd;
}

// P[X_n <= a1, max <= a2] for the walk started at 0 (max checked at every
// monitoring date including 0): evolve the sub-density killed above a2.
// Mass leaving the window below is frozen in a bucket (it stays below every
// queried a1 and cannot meaningfully re-rise).
inline double oracle_cpdf(const StepDensity& sd, int n, double a1, double a2) {
  if (a2 < 0.0) return 0.0;
  int keep_hi = int(std::floor(a2 / sd.h + 1e-9));
  int lo = sd.k_lo * 2;
  int len = keep_hi - lo + 1;
  std::vector<double> g(len, 0.0);
  g[size_t(-lo)] = 1.0;
  double below = 0.0;
  for (int step = 0; step < n; ++step) {
    auto full = oracle_detail::convolve(g, sd.p);
    std::vector<double> next(len, 0.0);
    int off = lo + sd.k_lo;
    for (size_t idx = 0; idx < full.size(); ++idx) {
      int k = off + int(idx);
      if (k < lo) below += full[idx];
      else if (k <= keep_hi) next[size_t(k - lo)] += full[idx];
      // k > keep_hi: running maximum exceeded a2
    }
    g.swap(next);
  }
  int q_hi = int(std::floor(a1 / sd.h + 1e-9));
  double acc = below;
  for (int k = lo; k <= std::min(q_hi, keep_hi); ++k) acc += g[size_t(k - lo)];
  return acc;
}

// Same evolution retaining snapshots at the requested step counts.
inline std::vector<std::vector<double>> oracle_cpdf_batch(
    const StepDensity& sd, const std::vector<int>& steps, const std::vector<double>& a1s,
    double a2) {
  std::vector<std::vector<double>> out(steps.size(), std::vector<double>(a1s.size(), 0.0));
  if (a2 < 0.0) return out;
  int n_max = *std::max_element(steps.begin(), steps.end());
  int keep_hi = int(std::floor(a2 / sd.h + 1e-9));
  int lo = sd.k_lo * 2;
  int len = keep_hi - lo + 1;
  std::vector<double> g(len, 0.0);
  g[size_t(-lo)] = 1.0;
  double below = 0.0;
  auto record = [&](size_t si) {
    for (size_t ia = 0; ia < a1s.size(); ++ia) {
      int q_hi = int(std::floor(a1s[ia] / sd.h + 1e-9));
      double acc = below;
      for (int k = lo; k <= std::min(q_hi, keep_hi); ++k) acc += g[size_t(k - lo)];
      out[si][ia] = acc;
    }
  };
  for (int step = 1; step <= n_max; ++step) {
    auto full = oracle_detail::convolve(g, sd.p);
    std::vector<double> next(len, 0.0);
    int off = lo + sd.k_lo;
    for (size_t idx = 0; idx < full.size(); ++idx) {
      int k = off + int(idx);
      if (k < lo) below += full[idx];
      else if (k <= keep_hi) next[size_t(k - lo)] += full[idx];
    }
    g.swap(next);
    for (size_t si = 0; si < steps.size(); ++si)
      if (steps[si] == step) record(si);
  }
  return out;
}

// Full joint law of (X_n, max) on a 2D lattice: rho[m][x] with levels
// m = 0..nm-1 (max = m*h) and x-cells ix_lo..ix_lo+nx-1. Mass exiting in x
// below the window freezes at its max level; mass whose max exceeds the level
// window keeps evolving in x in a 1D overflow row.
struct JointGrid {
  double h = 0.0;
  int nx = 0, nm = 0, ix_lo = 0;
  std::vector<double> rho;
  std::vector<double> frozen_by_max;
  std::vector<double> overflow_x;
  StepDensity step;

  double& at(int m, int ix) { return rho[size_t(m) * nx + (ix - ix_lo)]; }
  double at(int m, int ix) const { return rho[size_t(m) * nx + (ix - ix_lo)]; }
  double total_mass() const {
    double t = 0.0;
    for (double v : rho) t += v;
    for (double v : frozen_by_max) t += v;
    for (double v : overflow_x) t += v;
    return t;
  }
};

inline JointGrid make_joint_start(const StepDensity& sd, int ix_lo, int nx, int nm) {
  JointGrid j;
  j.h = sd.h;
  j.ix_lo = ix_lo;
  j.nx = nx;
  j.nm = nm;
  j.step = sd;
  j.rho.assign(size_t(nm) * nx, 0.0);
  j.frozen_by_max.assign(nm, 0.0);
  j.overflow_x.assign(nx, 0.0);
  if (ix_lo > 0 || ix_lo + nx <= 0) throw Error("make_joint_start: window must contain 0");
  j.at(0, 0) = 1.0;  // X_0 = max_0 = 0
  return j;
}

inline JointGrid evolve(const JointGrid& in, int steps) {
  JointGrid j = in;
  const int nx = j.nx, nm = j.nm, ix_lo = j.ix_lo;
  int ix_hi = ix_lo + nx - 1;
  for (int s = 0; s < steps; ++s) {
    std::vector<double> next(size_t(nm) * nx, 0.0);
    std::vector<double> over_next(nx, 0.0);
    for (int m = 0; m < nm; ++m) {
      std::vector<double> row(j.rho.begin() + size_t(m) * nx,
                              j.rho.begin() + size_t(m + 1) * nx);
      bool empty = true;
      for (double v : row) empty = empty && v == 0.0;
      if (empty) continue;
      auto full = oracle_detail::convolve(row, j.step.p);
      int off = ix_lo + j.step.k_lo;
      for (size_t idx = 0; idx < full.size(); ++idx) {
        double v = full[idx];
        if (v == 0.0) continue;
        int k = off + int(idx);
        if (k < ix_lo) {
          j.frozen_by_max[size_t(m)] += v;  // left the window going down
        } else if (k > ix_hi) {
          // position (and hence max) exceeded the x-window
          over_next[size_t(nx - 1)] += v;
        } else {
          int m2 = std::max(m, k);  // fold: new max level if the walk rose
          if (m2 >= nm) over_next[size_t(k - ix_lo)] += v;
          else next[size_t(m2) * nx + (k - ix_lo)] += v;
        }
      }
    }
    // overflow row: max already above the level window, x keeps diffusing
    bool over_empty = true;
    for (double v : j.overflow_x) over_empty = over_empty && v == 0.0;
    if (!over_empty) {
      auto full = oracle_detail::convolve(j.overflow_x, j.step.p);
      int off = ix_lo + j.step.k_lo;
      for (size_t idx = 0; idx < full.size(); ++idx) {
        int k = std::clamp(off + int(idx), ix_lo, ix_hi);
        over_next[size_t(k - ix_lo)] += full[idx];
      }
    }
    j.rho.swap(next);
    j.overflow_x.swap(over_next);
  }
  return j;
}

inline double query_cpdf(const JointGrid& j, double a1, double a2) {
  if (a2 < 0.0) return 0.0;
  int m_hi = std::min(int(std::floor(a2 / j.h + 1e-9)), j.nm - 1);
  int x_hi = int(std::floor(a1 / j.h + 1e-9));
  double acc = 0.0;
  for (int m = 0; m <= m_hi; ++m) {
    acc += j.frozen_by_max[size_t(m)];  // frozen mass sits below every queried a1
    for (int ix = j.ix_lo; ix <= std::min(x_hi, j.ix_lo + j.nx - 1); ++ix)
      acc += j.at(m, ix);
  }
  return acc;
}

// Expectation of f(x, max). Frozen mass is evaluated at the window floor;
// overflow mass at the level-window top (callers choose windows so both
// carry negligible weight).
inline double query_payoff(const JointGrid& j, const std::function<double(double, double)>& f) {
  double acc = 0.0;
  for (int m = 0; m < j.nm; ++m) {
    double mv = m * j.h;
    for (int ix = j.ix_lo; ix < j.ix_lo + j.nx; ++ix) {
      double v = j.at(m, ix);
      if (v != 0.0) acc += v * f(ix * j.h, mv);
    }
    acc += j.frozen_by_max[size_t(m)] * f(j.ix_lo * j.h, mv);
  }
  for (int ix = j.ix_lo; ix < j.ix_lo + j.nx; ++ix) {
    double v = j.overflow_x[size_t(ix - j.ix_lo)];
    if (v != 0.0) acc += v * f(ix * j.h, j.nm * j.h);
  }
  return acc;
}

// E[(e^{beta(x1+X_2)} - e^{max(x2, x1+max)})_+] by the two-step payoff-
// weighted double sum over the increment lattice. Cells are skipped only
// when their payoff-weighted mass cannot matter (growth-aware threshold);
// the inner loop starts where the payoff can first turn positive.
inline double oracle_exchange_n2(const StepDensity& sd, double beta, double x1, double x2) {
  const int n = sd.size();
  const double h = sd.h;
  double wmax = 0.0;
  std::vector<double> w(n);
  for (int a = 0; a < n; ++a) {
    double x = (sd.k_lo + a) * h;
    w[size_t(a)] = sd.p[size_t(a)] * std::exp(beta * std::max(x, 0.0));
    wmax = std::max(wmax, w[size_t(a)]);
  }
  const double cut = 1e-20 * wmax;
  std::vector<double> eb(n), ey(n);
  for (int b = 0; b < n; ++b) {
    double y = (sd.k_lo + b) * h;
    eb[size_t(b)] = std::exp(beta * y);
    ey[size_t(b)] = std::exp(y);
  }
  const double c_end = std::exp(beta * x1);
  const double c_flat = std::max(std::exp(x2), std::exp(x1));
  const double c_mid = std::exp(x1);
  double acc = 0.0;
  for (int a = 0; a < n; ++a) {
    double pa = sd.p[size_t(a)];
    if (w[size_t(a)] < cut) continue;
    double y1 = (sd.k_lo + a) * h;
    // payoff > 0 needs beta(x1+y1+y2) > max(x2, x1, x1+y1, x1+y1+y2)
    double lo_y2 = std::max({x2 / beta - x1 - y1, x1 / beta - x1 - y1,
                             (x1 + y1) / beta - x1 - y1, -x1 - y1});
    int b0 = std::max(0, int(std::floor((lo_y2 / h) - sd.k_lo)) - 1);
    double fa = c_end * eb[size_t(a)];
    double ma = std::max(c_flat, c_mid * ey[size_t(a)]);
    double my = c_mid * ey[size_t(a)];
    for (int b = b0; b < n; ++b) {
      if (w[size_t(b)] < cut) continue;
      double pay = fa * eb[size_t(b)] - std::max(ma, my * ey[size_t(b)]);
      if (pay > 0.0) acc += pa * sd.p[size_t(b)] * pay;
    }
  }
  return acc;
}

}  // namespace walkmax
