#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rvc {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

/// A rewrite produced a string longer than the symbol cap.
class CapExceeded : public Error {
 public:
  CapExceeded(std::size_t length, std::size_t cap, int depth = -1);
  std::size_t length() const { return length_; }
  std::size_t cap() const { return cap_; }
  /// Depth at which the cap was first exceeded, or -1 for a single rewrite.
  int depth() const { return depth_; }

 private:
  std::size_t length_;
  std::size_t cap_;
  int depth_;
};

class NotAForwardSymbol : public Error {
 public:
  using Error::Error;
};

class EmptyTrajectory : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

class NotInSupport : public Error {
 public:
  using Error::Error;
};

class RejectionLimitExceeded : public Error {
 public:
  RejectionLimitExceeded(std::size_t attempts, std::string failing_constraint);
  const std::string& failing_constraint() const { return constraint_; }

 private:
  std::string constraint_;
};

class SupportTooLarge : public Error {
 public:
  using Error::Error;
};

class DerivationTooLarge : public Error {
 public:
  using Error::Error;
};

class DegenerateDistractor : public Error {
 public:
  using Error::Error;
};

class TooManySegments : public Error {
 public:
  using Error::Error;
};

class TooFewSegments : public Error {
 public:
  using Error::Error;
};

class EmptyImage : public Error {
 public:
  using Error::Error;
};

}  // namespace rvc
