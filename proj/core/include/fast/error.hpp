#pragma once

#include <stdexcept>
#include <string>

namespace fast {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad magic, unknown version, or any structural mismatch in a binary file.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Payload shorter or longer than the header promises.
class CorruptionError : public Error {
 public:
  using Error::Error;
};

// Values that violate a type invariant (label range, NaN features, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class GenerationError : public Error {
 public:
  using Error::Error;
};

// A request that cannot be satisfied by the data at hand (k > |ids|, ...).
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class PropagationError : public Error {
 public:
  using Error::Error;
};

class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

class ScoringError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

}  // namespace fast
