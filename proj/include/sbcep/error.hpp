#pragma once

#include <stdexcept>
#include <string>

namespace sbcep {

// Coarse failure classes; the CLI maps them onto exit codes.
enum class ErrorKind { Usage, Data, Runtime };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorKind::Usage, what) {}
};

class RuntimeFailure : public Error {
 public:
  explicit RuntimeFailure(const std::string& what) : Error(ErrorKind::Runtime, what) {}
};

}  // namespace sbcep
