#pragma once

#include <stdexcept>

namespace ergobound {

/// A computation was asked for in a mode it does not cover (e.g. periodic
/// constants of a non-periodic model).
class UnsupportedModeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A bound was requested without the sign or positivity condition it needs.
class PreconditionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TruncationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidGeneratorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ergobound
