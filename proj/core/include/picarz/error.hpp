#pragma once

#include <stdexcept>
#include <string>

namespace picarz {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad arguments, inconsistent dimensions, malformed files.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Factorization failures, non-convergence, invalid sampler states.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Filesystem failures.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace picarz
