#pragma once

#include <stdexcept>
#include <string>

namespace spur {

// Base for every error raised by the library. Subclasses name the contract
// that was violated so callers (notably the CLI) can map them to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes disagree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Data supplied to an operation is out of its domain (labels, token ids).
class InputError : public Error {
 public:
  using Error::Error;
};

// Invalid or incomplete configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Precondition on a call was not met (non-scalar loss, empty survivor set).
class ContractError : public Error {
 public:
  using Error::Error;
};

// Internal bookkeeping is inconsistent, e.g. a mask without its weight.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Training hit a non-finite loss.
class TrainingAborted : public Error {
 public:
  using Error::Error;
};

}  // namespace spur
