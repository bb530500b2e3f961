#pragma once

#include <stdexcept>
#include <string>

namespace nte {

// Caller broke a documented precondition (wrong dimensions, inactive robot,
// terminal state handed to search, ...).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Something went wrong while doing legitimate work: infeasible placement,
// unreadable checkpoint, failed search.
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration document. `path()` is the dotted field path,
// e.g. "game.tag_radius".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& message)
      : std::runtime_error(path + ": " + message), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

#define NTE_REQUIRE(cond, msg)                                   \
  do {                                                           \
    if (!(cond)) throw ::nte::ContractViolation(std::string(msg)); \
  } while (0)

}  // namespace nte
