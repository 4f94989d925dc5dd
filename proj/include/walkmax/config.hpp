#pragma once

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "walkmax/engine.hpp"
#include "walkmax/errors.hpp"
#include "walkmax/models.hpp"

namespace walkmax {

// Flat key-value configuration: `section.key = value` lines, '#' comments.
struct ConfigFile {
  std::map<std::string, std::string> kv;

  static ConfigFile parse(const std::string& text) {
    ConfigFile c;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    auto trim = [](std::string s) {
      auto issp = [](unsigned char ch) { return std::isspace(ch); };
      while (!s.empty() && issp(s.front())) s.erase(s.begin());
      while (!s.empty() && issp(s.back())) s.pop_back();
      return s;
    };
    while (std::getline(in, line)) {
      ++lineno;
      auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      line = trim(line);
      if (line.empty()) continue;
      auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
      std::string key = trim(line.substr(0, eq));
      std::string val = trim(line.substr(eq + 1));
      if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
      c.kv[key] = val;
    }
    return c;
  }

  // canonical form: sorted keys, single spaces around '='
  std::string serialize() const {
    std::string out;
    for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
    return out;
  }

  bool has(const std::string& k) const { return kv.count(k) > 0; }

  std::string str(const std::string& k, const std::string& dflt = "") const {
    auto it = kv.find(k);
    return it == kv.end() ? dflt : it->second;
  }

  double num(const std::string& k) const {
    auto it = kv.find(k);
    if (it == kv.end()) throw ConfigError("missing config key: " + k);
    return parse_num(it->second, k);
  }

  double num(const std::string& k, double dflt) const {
    auto it = kv.find(k);
    return it == kv.end() ? dflt : parse_num(it->second, k);
  }

  std::vector<double> num_list(const std::string& k) const {
    auto it = kv.find(k);
    if (it == kv.end()) throw ConfigError("missing config key: " + k);
    std::vector<double> out;
    std::string item;
    std::istringstream ss(it->second);
    while (std::getline(ss, item, ',')) out.push_back(parse_num(item, k));
    if (out.empty()) throw ConfigError("empty list for key: " + k);
    return out;
  }

 private:
  static double parse_num(const std::string& s, const std::string& k) {
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    while (end && *end && std::isspace(static_cast<unsigned char>(*end))) ++end;
    if (!end || *end != '\0')
      throw ConfigError("key " + k + ": cannot parse number from '" + s + "'");
    return v;
  }
};

struct RunConfig {
  // model
  double nu = 0.2, lambda_plus = 1.0, lambda_minus = -2.0;
  std::optional<double> m2, c_intensity;
  double dt = 1.0 / 252.0;
  // run
  double maturity_years = 0.25;
  std::string payoff = "cpdf";
  std::vector<double> a1_list, a2_list, h_list;
  double beta = 1.5;
  double x1 = 0.0, x2 = 0.0;
  // method
  EngineConfig engine;
  // output
  std::string out_path = "results.csv";
  std::string out_format = "csv";
  bool include_timing = false;

  static RunConfig from_file(const ConfigFile& c) {
    RunConfig r;
    r.nu = c.num("model.nu");
    r.lambda_plus = c.num("model.lambda_plus");
    r.lambda_minus = c.num("model.lambda_minus");
    if (c.has("model.m2")) r.m2 = c.num("model.m2");
    if (c.has("model.c_intensity")) r.c_intensity = c.num("model.c_intensity");
    if (r.m2.has_value() == r.c_intensity.has_value())
      throw ConfigError("exactly one of model.m2 / model.c_intensity must be given");
    r.dt = c.num("model.dt", 1.0 / 252.0);

    r.maturity_years = c.num("run.T");
    r.payoff = c.str("run.payoff", "cpdf");
    if (r.payoff != "cpdf" && r.payoff != "no_touch" && r.payoff != "barrier_digital" &&
        r.payoff != "exchange")
      throw ConfigError("run.payoff must be one of cpdf|no_touch|barrier_digital|exchange");
    if (c.has("run.a1")) r.a1_list = c.num_list("run.a1");
    if (c.has("run.a2")) r.a2_list = c.num_list("run.a2");
    if (c.has("run.h")) r.h_list = c.num_list("run.h");
    r.beta = c.num("run.beta", 1.5);
    r.x1 = c.num("run.x1", 0.0);
    r.x2 = c.num("run.x2", 0.0);

    std::string mode = c.str("method.mode", "auto");
    if (mode == "auto") r.engine.mode = Mode::Auto;
    else if (mode == "sinh") r.engine.mode = Mode::Sinh;
    else if (mode == "trapezoid") r.engine.mode = Mode::Trapezoid;
    else throw ConfigError("method.mode must be auto|sinh|trapezoid");
    r.engine.tol = c.num("method.tol", 1e-10);
    if (!(r.engine.tol >= 1e-14 && r.engine.tol <= 1e-2))
      throw ConfigError("method.tol must lie in [1e-14, 1e-2]");
    r.engine.m0_override = int(c.num("method.m0", 0));
    r.engine.n_plus_override = int(c.num("method.n_plus", 0));
    r.engine.n_minus_override = int(c.num("method.n_minus", 0));
    r.engine.trap_multiplier = c.num("method.trapezoid_multiplier", 1.0);
    r.engine.short_valuation_grids = c.str("method.short_valuation_grids", "false") == "true";
    r.engine.workers = int(c.num("method.workers", 0));

    r.out_path = c.str("output.path", "results.csv");
    r.out_format = c.str("output.format", "csv");
    r.include_timing = c.str("output.include_timing", "false") == "true";
    return r;
  }

  KoBoLModel make_model() const {
    double c = c_intensity ? *c_intensity : calibrate_c(nu, lambda_plus, lambda_minus, *m2);
    return KoBoLModel(nu, lambda_plus, lambda_minus, c, dt);
  }

  std::vector<Request> make_requests() const {
    std::vector<Request> reqs;
    if (payoff == "cpdf") {
      for (double a2 : a2_list)
        for (double a1 : a1_list)
          if (a1 <= a2) {
            Request r;
            r.kind = Request::Kind::Cpdf;
            r.a1 = a1;
            r.a2 = a2;
            r.x1 = x1;
            r.x2 = x2;
            reqs.push_back(r);
          }
    } else if (payoff == "no_touch") {
      for (double a2 : a2_list) {
        Request r;
        r.kind = Request::Kind::NoTouch;
        r.a2 = a2;
        r.x1 = x1;
        r.x2 = x2;
        reqs.push_back(r);
      }
    } else if (payoff == "barrier_digital") {
      for (double h : h_list)
        for (double a1 : a1_list)
          if (a1 <= h) {
            Request r;
            r.kind = Request::Kind::BarrierDigital;
            r.a1 = a1;
            r.h = h;
            r.x1 = x1;
            r.x2 = x2;
            reqs.push_back(r);
          }
    } else {  // exchange
      Request r;
      r.kind = Request::Kind::Exchange;
      r.beta = beta;
      r.x1 = x1;
      r.x2 = x2;
      if (!(lambda_minus < -beta))
        throw StripViolation("exchange: need lambda_minus < -beta");
      reqs.push_back(r);
    }
    return reqs;
  }
};

}  // namespace walkmax
