#pragma once

#include <stdexcept>
#include <string>

namespace suvr {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NormTooSmall : Error {
  using Error::Error;
};

struct DimensionMismatch : Error {
  using Error::Error;
};

struct NonPositiveTemperature : Error {
  using Error::Error;
};

struct NotEnoughCandidates : Error {
  using Error::Error;
};

struct NegativesExhaustPositives : Error {
  using Error::Error;
};

struct IndexOutOfRange : Error {
  using Error::Error;
};

struct SetOverlap : Error {
  using Error::Error;
};

// Malformed input file; message names the offending row/column or byte.
struct ParseError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

// Invalid configuration; message names the field and the violated constraint.
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace suvr
