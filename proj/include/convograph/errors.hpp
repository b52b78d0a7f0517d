#pragma once

#include <stdexcept>
#include <string>

namespace convograph {

// Base for everything thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad user-supplied configuration or arguments. The CLI maps this to exit
// code 1.
struct ConfigError : Error {
  using Error::Error;
};

// File or parse problems in inputs and artifacts.
struct IoError : Error {
  using Error::Error;
};

// A remote provider (embedding service, LLM endpoint) failed.
struct ProviderError : Error {
  using Error::Error;
};

// Any failure inside a pipeline stage, tagged with the stage name. The CLI
// maps this to exit code 2.
struct StageError : Error {
  StageError(const std::string& stage, const std::string& message)
      : Error("stage " + stage + ": " + message), stage_name(stage) {}
  std::string stage_name;
};

}  // namespace convograph
