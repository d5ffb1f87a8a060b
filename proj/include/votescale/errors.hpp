#pragma once

#include <stdexcept>
#include <string>

namespace votescale {

// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Malformed caller input: unsorted grids, length mismatches, empty data.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A strategy was requested that the supplied data cannot support.
class ConfigurationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// The filter keeps no answer with positive probability.
class DegenerateFilterError : public DomainError {
 public:
  using DomainError::DomainError;
};

// Difficulty indicator is exactly zero; the K -> infinity limit is undefined.
class TieAtInfinityError : public DomainError {
 public:
  using DomainError::DomainError;
};

class UnsupportedError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Fewer distinct training points than free parameters.
class UnderdeterminedError : public InputError {
 public:
  using InputError::InputError;
};

}  // namespace votescale
