#pragma once

#include <stdexcept>
#include <string>

namespace pushedfront {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid user input: bad config keys, out-of-range parameters, unreadable files.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Phase integration or root-finding broke down.
class SpectralError : public Error {
 public:
  using Error::Error;
};

// A quantity that does not exist in the current regime (e.g. a divergent variance constant).
class RegimeError : public Error {
 public:
  using Error::Error;
};

// An eigen-series evaluated below its convergence horizon.
class SeriesError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace pushedfront
