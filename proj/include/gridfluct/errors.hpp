#pragma once

#include <stdexcept>
#include <string>

namespace gridfluct {

/// Malformed or inconsistent input (schema, connectivity, parameter ranges).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical procedure failed to converge or produced an unusable result.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The synchronous state violates the security condition |delta_ij| < pi/2.
class InsecureStateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A closed-form formula was requested outside its domain of validity.
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gridfluct
