#pragma once

#include <stdexcept>
#include <string>

namespace ttsalsa {

/// Invalid argument (bad index, bad parameter range, ...).
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Shape or size mismatch between operands.
class SizeError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Malformed input file or config line.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite values or a failed factorization.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ttsalsa
