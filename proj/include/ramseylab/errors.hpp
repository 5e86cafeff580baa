#pragma once

#include <stdexcept>
#include <string>

namespace ramseylab {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class OutOfRange : public Error {
 public:
  using Error::Error;
};

// Numerical failures. The CLI maps these to exit code 3.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// An occupied basis state would be pushed above the Fock truncation.
class TruncationOverflow : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Conditioning on a measurement branch whose probability is numerically zero.
class ZeroProbability : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace ramseylab
