#pragma once

#include <stdexcept>
#include <string>

namespace rdp {

// Base for every error raised by the library. Callers that only care about
// "something went wrong with the inputs" can catch this one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class DomainError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class AbsoluteContinuityViolation : public Error {
 public:
  using Error::Error;
};

class ShrinkNotAllowed : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class InfeasibleMass : public Error {
 public:
  using Error::Error;
};

class NumericalOverflow : public Error {
 public:
  using Error::Error;
};

class NoTransitionFound : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class TooSmall : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class SeedRequired : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class Infeasible : public Error {
 public:
  using Error::Error;
};

}  // namespace rdp
