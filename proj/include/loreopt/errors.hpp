#pragma once

#include <stdexcept>
#include <string>

namespace loreopt {

// Library errors are thrown, never returned; each condition gets its own type
// so callers and tests can match on the failure class.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ShapeError : Error {
  using Error::Error;
};

struct InvalidInput : Error {
  using Error::Error;
};

struct InvalidRank : Error {
  using Error::Error;
};

struct DegenerateInput : Error {
  using Error::Error;
};

struct NumericalDivergence : Error {
  using Error::Error;
};

struct HorizonTooShort : Error {
  using Error::Error;
};

struct InvalidConstruction : Error {
  using Error::Error;
};

struct OracleContractViolation : Error {
  using Error::Error;
};

struct LemmaViolation : Error {
  using Error::Error;
};

struct InvalidMetric : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

}  // namespace loreopt
