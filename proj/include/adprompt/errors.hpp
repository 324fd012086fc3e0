#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace adprompt {

// Base class for all library errors. The CLI maps subclasses onto exit codes
// (see tools/adprompt_cli.cpp).
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Bad config file, bad flag combination, invalid schema in a config document.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Invalid content in user-supplied data: CHAT files, manifests, pool files.
class DataError : public Error {
 public:
  using Error::Error;
};

// CHAT parse failure; carries the 1-based line number of the offending line.
class ChatParseError : public DataError {
 public:
  ChatParseError(const std::string& msg, int line)
      : DataError("CHAT parse error at line " + std::to_string(line) + ": " + msg),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// Train/test contamination. Names every offending subject.
class LeakageError : public DataError {
 public:
  explicit LeakageError(std::vector<std::string> subjects)
      : DataError(describe(subjects)), subjects_(std::move(subjects)) {}
  const std::vector<std::string>& subjects() const { return subjects_; }

 private:
  static std::string describe(const std::vector<std::string>& subjects) {
    std::string msg = "test-split leakage: subject(s)";
    for (const auto& s : subjects) msg += " " + s;
    msg += " appear where only train-split subjects are allowed";
    return msg;
  }
  std::vector<std::string> subjects_;
};

// Argument outside its documented domain (e.g. MMSE not in 0..30).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Anything that goes wrong talking to a completion backend.
class BackendError : public Error {
 public:
  using Error::Error;
};

class TimeoutError : public BackendError {
 public:
  using BackendError::BackendError;
};

class AuthError : public BackendError {
 public:
  using BackendError::BackendError;
};

// Connection-level failure (refused, reset, DNS, 5xx).
class TransportError : public BackendError {
 public:
  using BackendError::BackendError;
};

// Server answered but the body is not a well-formed completion response.
class MalformedResponseError : public BackendError {
 public:
  using BackendError::BackendError;
};

class RetriesExhaustedError : public BackendError {
 public:
  using BackendError::BackendError;
};

// Requested capability (e.g. image input) not supported by the backend.
class CapabilityError : public BackendError {
 public:
  using BackendError::BackendError;
};

// Strict replay: no cached record for the request.
class CacheMissError : public BackendError {
 public:
  explicit CacheMissError(const std::string& key)
      : BackendError("replay cache miss for key " + key), key_(key) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

}  // namespace adprompt
