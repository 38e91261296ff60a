#pragma once

#include <stdexcept>
#include <string>

namespace dsvgp {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class FactorizationFailed : public Error {
 public:
  using Error::Error;
};

class NonPsd : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace dsvgp
