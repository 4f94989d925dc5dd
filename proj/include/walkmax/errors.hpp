#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace walkmax {

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct BranchCutError : Error {
  explicit BranchCutError(const std::string& msg) : Error(msg) {}
};

struct InvalidTolerance : Error {
  explicit InvalidTolerance(const std::string& msg) : Error(msg) {}
};

struct InvalidOrder : Error {
  explicit InvalidOrder(const std::string& msg) : Error(msg) {}
};

struct GammaTooSmall : Error {
  explicit GammaTooSmall(const std::string& msg) : Error(msg) {}
};

struct StripNotFound : Error {
  explicit StripNotFound(const std::string& msg) : Error(msg) {}
};

// Carries the witness point that landed on (or too near) the log branch cut.
struct DeformationInvalid : Error {
  std::complex<double> q_witness;
  std::complex<double> eta_witness;
  double distance;

  DeformationInvalid(const std::string& msg, std::complex<double> q,
                     std::complex<double> eta, double dist)
      : Error(msg), q_witness(q), eta_witness(eta), distance(dist) {}
};

struct NonFiniteExponent : Error {
  explicit NonFiniteExponent(const std::string& msg) : Error(msg) {}
};

struct DivisionByZero : Error {
  explicit DivisionByZero(const std::string& msg) : Error(msg) {}
};

struct StripViolation : Error {
  explicit StripViolation(const std::string& msg) : Error(msg) {}
};

struct TailMassError : Error {
  explicit TailMassError(const std::string& msg) : Error(msg) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

}  // namespace walkmax
