#pragma once

#include <array>
#include <cstdlib>
#include <string>
#include <vector>

namespace walkmax::bench {

// Reference joint-cpdf values for the KoBoL scenarios (lambda_plus = 1,
// lambda_minus = -2, m2 = 0.1, dt = 1/252, x1 = x2 = 0), kept as decimal
// strings to avoid any transcription drift through binary rounding.
// Row index: a2 in {0.025, 0.05, 0.075, 0.1, 0.175};
// column index: a1 in {-0.075, -0.05, -0.025, 0, 0.025}.

inline constexpr std::array<double, 5> kA1 = {-0.075, -0.05, -0.025, 0.0, 0.025};
inline constexpr std::array<double, 5> kA2 = {0.025, 0.05, 0.075, 0.1, 0.175};

using TableStrings = std::array<std::array<const char*, 5>, 5>;

inline constexpr TableStrings kT025Nu02 = {{
    {"0.052873910286366", "0.0650091858382787", "0.0879288341672031",
     "0.506532201212114", "0.923468308358369"},
    {"0.0534088530783456", "0.0656338924464693", "0.0886847807216264",
     "0.507515090989102", "0.925299214939269"},
    {"0.0536456853005228", "0.0659043877286091", "0.0890004474115774",
     "0.507896616129521", "0.925793930891586"},
    {"0.0537794257554031", "0.0660548821001662", "0.0891723010284717",
     "0.508097111907463", "0.926036138000489"},
    {"0.0539628421387795", "0.0662578446892915", "0.0893989471374944",
     "0.508353292242695", "0.926330710592022"},
}};

inline constexpr TableStrings kT5Nu02 = {{
    {"0.322715785176063", "0.341705312612668", "0.362654563514927",
     "0.385503065295135", "0.402853073943893"},
    {"0.36823129960626", "0.390755656346763", "0.415922513339139",
     "0.444104383367338", "0.469731888892867"},
    {"0.396209256972821", "0.420842816392821", "0.448475971976962",
     "0.479643744322071", "0.509135503443898"},
    {"0.415752842072438", "0.44180038793114", "0.471059131572705",
     "0.504139671693882", "0.535967402412399"},
    {"0.450253847495689", "0.478623894580305", "0.510496476100609",
     "0.546559667768138", "0.581857694138651"},
}};

inline constexpr TableStrings kT15Nu02 = {{
    {"0.273003522656352", "0.275060714621777", "0.276863384237128",
     "0.278361438403706", "0.279413583881186"},
    {"0.325601636899453", "0.328403204232286", "0.330932690547093",
     "0.333148630324321", "0.334989330744591"},
    {"0.364467787376584", "0.367935193185576", "0.371127846709011",
     "0.37400815325999", "0.376529331567823"},
    {"0.396164068347951", "0.400244732717707", "0.404054649236343",
     "0.407558402431724", "0.410715394955968"},
    {"0.467032161225892", "0.472690792930844", "0.47810575026395",
     "0.483245070441871", "0.488075079451549"},
}};

inline constexpr TableStrings kT15Nu12 = {{
    {"0.08750889022257", "0.0876433202115771", "0.0877488959582886",
     "0.0878234438630917", "0.0878604203790796"},
    {"0.133430426595114", "0.133678790617469", "0.133884632610215",
     "0.134046292415956", "0.13416044157208"},
    {"0.172212077596399", "0.172587459419214", "0.172909022548126",
     "0.173175531405955", "0.173384836452991"},
    {"0.206872444504732", "0.207388307897551", "0.207840301897249",
     "0.208227492747064", "0.208548393051015"},
    {"0.295589651996839", "0.296599359388506", "0.297519605986825",
     "0.298349844042413", "0.299089406243993"},
}};

struct Scenario {
  const char* id;
  double nu;
  double maturity_years;
  const TableStrings* table;
  double trap_multiplier;  // the T=15 runs halve the generic M0 recommendation
  int expected_m0_lo, expected_m0_hi;  // sanity window for the sinh q-grid
};

inline const std::vector<Scenario>& scenarios() {
  static const std::vector<Scenario> s = {
      {"t025_nu02", 0.2, 0.25, &kT025Nu02, 1.0, 8, 64},
      {"t5_nu02", 0.2, 5.0, &kT5Nu02, 1.0, 10, 100},
      {"t15_nu02", 0.2, 15.0, &kT15Nu02, 0.5, 10, 200},
      {"t15_nu12", 1.2, 15.0, &kT15Nu12, 0.5, 10, 200},
  };
  return s;
}

inline double table_value(const TableStrings& t, int row_a2, int col_a1) {
  return std::strtod(t[size_t(row_a2)][size_t(col_a1)], nullptr);
}

// 44-point (a1, a2) batch used by the bench command: the 25 tabulated pairs
// plus extra columns/rows inside the same ranges (three of them diagonal).
inline std::vector<std::pair<double, double>> bench_grid() {
  std::vector<std::pair<double, double>> g;
  for (double a2 : kA2)
    for (double a1 : kA1) g.emplace_back(a1, a2);
  for (double a2 : {0.125, 0.15})
    for (double a1 : kA1) g.emplace_back(a1, a2);
  const std::pair<double, double> extra[] = {
      {0.05, 0.05}, {0.05, 0.075}, {0.05, 0.1}, {0.05, 0.175}, {0.075, 0.075},
      {0.075, 0.1}, {0.075, 0.175}, {0.1, 0.1},  {0.1, 0.175}};
  for (auto& p : extra) g.push_back(p);
  return g;
}

}  // namespace walkmax::bench
