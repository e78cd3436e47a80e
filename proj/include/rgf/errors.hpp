#pragma once

#include <stdexcept>
#include <string>

namespace rgf {

// Malformed input documents (JSON configs, edge lists, CLI overrides).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A well-formed request that violates a module contract
// (e.g. a graph that is not strongly connected, delta <= 0).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Failures during computation: non-finite state, eigen-solver breakdown.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rgf
