#pragma once

#include <stdexcept>
#include <string>

namespace smanon {

// Raised for invalid inputs or infeasible problems. The CLI maps it to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace smanon
