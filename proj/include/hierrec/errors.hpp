#pragma once

#include <stdexcept>
#include <string>

namespace hierrec {

/// Malformed input: bad files, inconsistent dimensions, unknown names.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A factorization failed or a system was too ill-conditioned to solve.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double condition);

  /// Estimated condition number of the offending matrix (inf if singular).
  double condition() const noexcept { return condition_; }

 private:
  double condition_;
};

}  // namespace hierrec
