#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace spdcmap {

/// Raised when an input object violates one or more of its invariants.
/// Every violated invariant is listed in issues(); what() joins them.
class ValidationError : public std::invalid_argument {
public:
  explicit ValidationError(std::vector<std::string> issues);
  explicit ValidationError(const std::string& issue)
      : ValidationError(std::vector<std::string>{issue}) {}

  const std::vector<std::string>& issues() const noexcept { return issues_; }

private:
  std::vector<std::string> issues_;
};

/// Raised by the iterative and closed-form fitters when no trustworthy
/// estimate can be produced.
class FitError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace spdcmap
