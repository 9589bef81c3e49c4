#pragma once

#include <stdexcept>
#include <string>

namespace surfmimo {

enum class ErrorCategory { config = 2, model = 3, io = 4 };

/// Base for every error raised by the library. The category selects the
/// process exit code used by the command-line tool.
class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}
  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorCategory::config, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCategory::io, what) {}
};

class ModelError : public Error {
 public:
  explicit ModelError(const std::string& what) : Error(ErrorCategory::model, what) {}
};

// Model errors, one type per failure mode callers may want to catch.
class DomainError : public ModelError {
 public:
  using ModelError::ModelError;
};
class NearFieldError : public ModelError {
 public:
  using ModelError::ModelError;
};
class DegenerateMaterialError : public ModelError {
 public:
  using ModelError::ModelError;
};
class FitError : public ModelError {
 public:
  using ModelError::ModelError;
};
class StreamSeparationError : public ModelError {
 public:
  using ModelError::ModelError;
};
class UndefinedConditionError : public ModelError {
 public:
  using ModelError::ModelError;
};
class CoverageError : public ModelError {
 public:
  using ModelError::ModelError;
};

}  // namespace surfmimo
