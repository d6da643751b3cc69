#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace zara {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or invariant-violating input data. Carries the source
/// location when the data came from a file.
class DataError : public Error {
 public:
  explicit DataError(const std::string& message) : Error(message) {}
  DataError(const std::string& path, std::size_t line, const std::string& field,
            const std::string& message)
      : Error(path + ":" + std::to_string(line) +
              (field.empty() ? std::string() : ": field '" + field + "'") +
              ": " + message),
        path_(path),
        line_(line),
        field_(field) {}

  const std::string& path() const { return path_; }
  std::size_t line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  std::string path_;
  std::size_t line_ = 0;
  std::string field_;
};

/// A caller broke an operation's precondition (wrong task, empty input,
/// too few items, ...).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A prediction could not be mapped to an NLI query.
class MappingError : public Error {
 public:
  using Error::Error;
};

/// A model backend failed, was unreachable, or returned an invalid payload.
class BackendError : public Error {
 public:
  BackendError(std::string endpoint, const std::string& message)
      : Error("backend '" + endpoint + "': " + message),
        endpoint_(std::move(endpoint)) {}

  const std::string& endpoint() const { return endpoint_; }

 private:
  std::string endpoint_;
};

/// Invalid run configuration; names the offending field.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& message)
      : Error("config field '" + field + "': " + message),
        field_(std::move(field)) {}

  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

}  // namespace zara
