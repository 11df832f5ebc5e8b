#pragma once

#include <stdexcept>
#include <string>

namespace lgmreg {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument or violated precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// The rotation of a weighted alignment is not unique (collinear or
/// coincident means).
class DegenerateConfiguration : public Error {
 public:
  using Error::Error;
};

/// All mixture components are numerically unreachable from some point.
class DegenerateMixture : public Error {
 public:
  using Error::Error;
};

/// File could not be read, written or parsed.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace lgmreg
