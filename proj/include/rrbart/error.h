#pragma once

#include <stdexcept>
#include <string>

namespace rrbart {

// Malformed input data: parse failures, schema mismatches, domain violations.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Invalid parameters or configuration.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// A model or procedure could not complete on otherwise valid input.
class RuntimeFailure : public std::runtime_error {
 public:
  explicit RuntimeFailure(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace rrbart
