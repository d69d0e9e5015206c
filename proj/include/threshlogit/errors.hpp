#pragma once

#include <stdexcept>
#include <string>

namespace threshlogit {

/// A transform, utility specification or parameter set that violates its invariants.
class InvalidSpecError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// An argument outside the domain of a function (non-finite input, zero denominator, ...).
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// Malformed or inconsistent input data (CSV rows, JSON documents, empty datasets).
class DataError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A numerical procedure that could not produce a usable result.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace threshlogit
