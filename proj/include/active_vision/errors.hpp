#pragma once

#include <stdexcept>
#include <string>

namespace active_vision {

/// Rejected argument: violates an operation's precondition.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A domain invariant does not hold (bad scene, inconsistent resolutions, ...).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The scenario generator could not satisfy a constraint.
class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed text input. `line()` is 1-based; 0 when not line-oriented.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Configuration problem, naming the offending key (and line when known).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what, std::size_t line = 0)
      : std::runtime_error(format(key, what, line)), key_(std::move(key)), line_(line) {}
  const std::string& key() const noexcept { return key_; }
  std::size_t line() const noexcept { return line_; }

 private:
  static std::string format(const std::string& key, const std::string& what, std::size_t line) {
    std::string msg = line > 0 ? "line " + std::to_string(line) + ": " : "";
    return msg + "'" + key + "': " + what;
  }
  std::string key_;
  std::size_t line_;
};

/// Wire-level violation: bad frame contents, id mismatch, bad RLE.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class TransportFailure { timeout, connection_refused, connection_closed, malformed_frame, io };

const char* to_string(TransportFailure kind);

class TransportError : public std::runtime_error {
 public:
  TransportError(TransportFailure kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  TransportFailure kind() const noexcept { return kind_; }

 private:
  TransportFailure kind_;
};

}  // namespace active_vision
