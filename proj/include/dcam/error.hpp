#pragma once

#include <stdexcept>
#include <string>

namespace dcam {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An image was passed in a color state the operation does not accept.
class StateMismatchError : public Error {
 public:
  using Error::Error;
};

// Tensor or image dimensions do not satisfy an operation's shape contract.
class ShapeError : public Error {
 public:
  using Error::Error;
};

class InvalidArgumentError : public Error {
 public:
  using Error::Error;
};

// Input carries no usable signal (all-black image, zero channel, ...).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

class UnsupportedCfaError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Checkpoint files: bad magic or unreadable header/layout.
class CheckpointFormatError : public IoError {
 public:
  using IoError::IoError;
};

class CheckpointVersionError : public IoError {
 public:
  using IoError::IoError;
};

// File ended before every declared tensor was read.
class CheckpointTruncatedError : public IoError {
 public:
  using IoError::IoError;
};

// Training produced a non-finite loss.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace dcam
