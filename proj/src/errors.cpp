#include "hierrec/errors.hpp"

#include <sstream>

namespace hierrec {

namespace {

std::string with_condition(const std::string& what, double condition) {
  std::ostringstream os;
  os << what << " (condition estimate " << condition << ")";
  return os.str();
}

}  // namespace

NumericalError::NumericalError(const std::string& what, double condition)
    : std::runtime_error(with_condition(what, condition)), condition_(condition) {}

}  // namespace hierrec
