#pragma once

#include <stdexcept>
#include <string>

namespace litefat {

// Base of every error thrown by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Tensor or matrix dimensions do not chain.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Malformed external data: streams, record files, checkpoints, configs.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Semantically invalid argument (empty clip, label out of range, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

// Key not present in an indexed collection.
class LookupError : public Error {
 public:
  using Error::Error;
};

// Operation invoked on an object in the wrong state.
class StateError : public Error {
 public:
  using Error::Error;
};

// Non-finite value where a finite one is required.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Filesystem failure (open, read, write).
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace litefat
