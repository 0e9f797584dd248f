#pragma once

#include <stdexcept>
#include <string>

namespace autocurriculum {

/// Bad or inconsistent configuration (exit class 2 in the CLI).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Model endpoint or message bus unreachable; retriable (exit class 3).
struct TransportError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent data: episodes, libraries, checkpoints (exit class 4).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A model response that does not follow the Reasoning/A format.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A caption or reward id that the library or policy does not know.
struct UnknownSkillError : DataError {
  using DataError::DataError;
};

}  // namespace autocurriculum
