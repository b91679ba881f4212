#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace memento {

/// Invalid parameters handed to a constructor or planner routine.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A call that violates an operation's precondition (wrong dimension,
/// index out of range, ...).
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Malformed textual input; carries the 1-based line number when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// File could not be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Maps a uniform 64-bit word onto [0, n) (multiply-high reduction).
inline std::uint64_t reduce_range(std::uint64_t word, std::uint64_t n) {
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(word) * n) >> 64);
}

/// ceil() that ignores floating-point noise just above an integer, so that
/// e.g. 4 / 0.01 yields 400 rather than 401.
std::uint64_t ceil_tolerant(double x);

/// Number of counters for an additive error of eps: ceil(4 / eps).
std::uint64_t counters_for_error(double eps);

}  // namespace memento
