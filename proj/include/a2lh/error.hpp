#pragma once

#include <stdexcept>
#include <string>

namespace a2lh {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed file contents. The message names the offending line/row/column.
class ParseError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Dimension disagreement between arguments.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Argument outside its documented domain.
class ValueError : public Error {
 public:
  using Error::Error;
};

}  // namespace a2lh
