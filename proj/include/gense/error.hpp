// Copyright 2026 The gense Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace gense {

// Exit codes shared by every command-line entry point.
enum class ExitCode : int { kOk = 0, kValidation = 1, kData = 2, kTraining = 3 };

class Error : public std::runtime_error {
 public:
  Error(const std::string& what, ExitCode code) : std::runtime_error(what), code_(code) {}
  ExitCode code() const { return code_; }

 private:
  ExitCode code_;
};

// Invalid hyperparameters, configuration keys, or flag values.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("config error: " + what, ExitCode::kValidation) {}
};

// Tensor shapes that do not fit together.
class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& what) : Error("dimension error: " + what, ExitCode::kValidation) {}
};

class IndexError : public Error {
 public:
  explicit IndexError(const std::string& what) : Error("index error: " + what, ExitCode::kData) {}
};

// Malformed or unsupported files (WAV, checkpoint, manifest, code streams).
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what) : Error("format error: " + what, ExitCode::kData) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error("data error: " + what, ExitCode::kData) {}
};

// Non-finite losses or gradients during optimization.
class TrainingError : public Error {
 public:
  explicit TrainingError(const std::string& what) : Error("training error: " + what, ExitCode::kTraining) {}
};

inline std::string shape_str(const std::vector<int>& shape) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

}  // namespace gense
