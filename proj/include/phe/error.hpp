#pragma once

#include <stdexcept>
#include <string>

namespace phe {

class InvalidParameter : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class IndexError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

class InvalidReward : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Factorization of a matrix that should have been positive definite failed.
class DecompositionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace phe
