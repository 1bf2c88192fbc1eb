#pragma once

#include <stdexcept>
#include <string>

namespace minsubfi {

// Malformed arguments: dimension mismatches, empty sets, non-finite values.
class InvalidInput : public std::invalid_argument {
 public:
  explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

// Arguments outside the mathematical domain of an operation
// (e.g. a zero demonstration feature under relative subdominance).
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

// Training diverged (non-finite loss or parameters).
class NumericalFailure : public std::runtime_error {
 public:
  explicit NumericalFailure(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace minsubfi
