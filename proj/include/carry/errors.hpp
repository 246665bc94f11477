#pragma once

#include <stdexcept>
#include <string>

namespace carry {

// Malformed or inconsistent input data: out-of-order frames, non-finite
// samples, missing channels, unreadable files. Configuration mistakes throw
// std::invalid_argument instead; violated call contracts throw
// std::domain_error.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace carry
