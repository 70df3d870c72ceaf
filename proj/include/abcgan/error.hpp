#pragma once

#include <stdexcept>
#include <string>

namespace abcgan {

// Base of every error the library throws. Subclasses say which subsystem
// failed; the message carries the offending layer, key, row or cell.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// A non-finite loss or gradient showed up during optimization.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class ModelError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace abcgan
