#pragma once

#include <stdexcept>
#include <string>

namespace intentgate {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input: preconditions, malformed files, unknown labels.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// A remote (or mock) backend failed: transport error, timeout, error body.
// Carries the classifier's top-1 so the caller can degrade if its policy allows.
class BackendError : public Error {
 public:
  BackendError(const std::string& what, std::string suggested_fallback = {})
      : Error(what), suggested_fallback_(std::move(suggested_fallback)) {}

  const std::string& suggested_fallback() const noexcept { return suggested_fallback_; }

 private:
  std::string suggested_fallback_;
};

}  // namespace intentgate
