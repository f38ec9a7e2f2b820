#pragma once

#include <stdexcept>
#include <string>

namespace rmp {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An argument or configuration value outside its documented domain.
class InvalidArgument : public Error {
 public:
  InvalidArgument(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// A required input (e.g. current data for a data-dependent prior) is absent.
class MissingInput : public Error {
 public:
  using Error::Error;
};

// A root search or quadrature did not converge.
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

// Every marginal likelihood of a mixture underflowed.
class DegenerateData : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline void require(bool ok, const char* field, const std::string& what) {
  if (!ok) throw InvalidArgument(field, what);
}

}  // namespace detail
}  // namespace rmp
