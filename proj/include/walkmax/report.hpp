#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include "walkmax/engine.hpp"

namespace walkmax {

inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// CSV with one row per request. The timing column prints 0 unless timing
// output was requested, keeping result files byte-stable across runs.
inline std::string results_csv(const std::vector<ResultRow>& rows, const RunDiagnostics& diag,
                               bool include_timing) {
  std::string out =
      "payoff,a1,a2,x1,x2,value,imag_residual,mode,M0,N_plus,N_minus,millis\n";
  const char* mode = diag.mode_used == Mode::Sinh ? "sinh" : "trapezoid";
  for (const auto& r : rows) {
    const char* kind = "cpdf";
    double first = r.req.a1;
    switch (r.req.kind) {
      case Request::Kind::Cpdf: kind = "cpdf"; first = r.req.a1; break;
      case Request::Kind::NoTouch: kind = "no_touch"; first = r.req.a2; break;
      case Request::Kind::BarrierDigital: kind = "barrier_digital"; first = r.req.h; break;
      case Request::Kind::Exchange: kind = "exchange"; first = r.req.beta; break;
    }
    out += kind;
    out += ",";
    out += format_g17(first) + "," + format_g17(r.req.a2) + "," + format_g17(r.req.x1) +
           "," + format_g17(r.req.x2) + "," + format_g17(r.value) + "," +
           format_g17(r.imag_residual) + ",";
    out += mode;
    out += "," + std::to_string(diag.m0) + "," + std::to_string(diag.n_plus) + "," +
           std::to_string(diag.n_minus) + ",";
    out += include_timing ? format_g17(diag.millis) : std::string("0");
    out += "\n";
  }
  return out;
}

}  // namespace walkmax
