#pragma once

#include <stdexcept>

namespace synsal {

// Bad paths, unknown config keys, malformed flags.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DatasetEmptyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A supervision signal was routed to the wrong source domain.
class DomainError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace synsal
