#pragma once

#include <stdexcept>
#include <string>

namespace itemrec {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input that does not satisfy a documented schema or invariant.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Artifacts from different stages or versions that cannot be combined.
class MismatchError : public Error {
 public:
  using Error::Error;
};

}  // namespace itemrec
