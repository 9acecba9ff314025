#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sbell {

/// Base of every library exception.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or unresolvable configuration (including missing credentials).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A persisted or user-supplied data file that does not parse. `line` is
/// 1-based, 0 when the location is unknown.
class DataError : public Error {
 public:
  DataError(const std::string& what, std::string path, std::size_t line)
      : Error(path.empty() ? what
                           : path + (line ? ":" + std::to_string(line) : "") + ": " + what),
        path_(std::move(path)),
        line_(line) {}

  const std::string& path() const noexcept { return path_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string path_;
  std::size_t line_;
};

/// Remote endpoint unreachable or returned a non-success status after retries.
class TransportError : public Error {
 public:
  using Error::Error;
};

/// Remote endpoint answered, but not in the expected shape.
class MalformedReply : public Error {
 public:
  using Error::Error;
};

}  // namespace sbell
