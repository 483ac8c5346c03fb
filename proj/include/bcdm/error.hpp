#pragma once

#include <stdexcept>
#include <string>

namespace bcdm {

// Failures that the command line front end maps onto distinct exit codes.
// Contract violations on in-memory inputs use std::invalid_argument /
// std::out_of_range instead.

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SamplerError : public std::runtime_error {
 public:
  SamplerError(int chain, const std::string& what)
      : std::runtime_error("chain " + std::to_string(chain) + ": " + what), chain_(chain) {}

  int chain() const noexcept { return chain_; }

 private:
  int chain_;
};

}  // namespace bcdm
