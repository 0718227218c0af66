#pragma once

#include <stdexcept>
#include <string>

namespace cogat {

// Violated precondition of a library call (bad arguments, misuse).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Tensor operands whose shapes do not compose.
class ShapeError : public ContractError {
 public:
  using ContractError::ContractError;
};

// Unreadable, malformed or inconsistent input files and configs.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Checkpoint and data/config that do not belong together (e.g. d_m mismatch).
class CompatibilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// NaN/Inf encountered where finite values are required.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cogat
