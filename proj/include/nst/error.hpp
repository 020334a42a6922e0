#pragma once

#include <stdexcept>
#include <string>

namespace nst {

/// Base class for every error raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shape or channel-count mismatch between operands.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Weight container with bad magic, version, or header.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Weight container that parsed but is missing a tensor or has a wrong shape.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Unknown layer, preset, or enum name.
class NameError : public Error {
 public:
  using Error::Error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

class ManifestError : public Error {
 public:
  using Error::Error;
};

class ScheduleError : public Error {
 public:
  using Error::Error;
};

/// Raised when the objective produces a non-finite value mid-optimization.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace nst
