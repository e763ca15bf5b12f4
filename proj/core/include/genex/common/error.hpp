#pragma once

#include <stdexcept>
#include <string>

namespace genex {

/// Argument outside the mathematical domain of an operation (empty input,
/// score out of range, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A remote call failed in a way that may succeed on retry.
class TransientError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Misconfiguration that no amount of retrying fixes (bad credentials,
/// exhausted quota, invalid config file).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IngestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RenderError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a (user, target reply) pair cannot be turned into a persona.
class IneligiblePairError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Human and agent reply sets are not aligned one-to-one.
class AlignmentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace genex
