#pragma once

#include <stdexcept>
#include <string>

namespace bdc {

// Caller violated a documented precondition (bad index, shape mismatch, ...).
class UsageError : public std::invalid_argument {
 public:
  explicit UsageError(const std::string& what) : std::invalid_argument(what) {}
};

// An iterative inner solver failed to make progress or produced non-finite values.
class SolverError : public std::runtime_error {
 public:
  explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace bdc
