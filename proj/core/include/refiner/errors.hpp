#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace refiner {

/// Bad caller input: dimensions, weights, flag values.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A metric is mathematically undefined on the given input (constant map, zero mass, ...).
class UndefinedMetric : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Malformed structured input (JSON, PNG, CSV).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Structurally valid input that violates domain invariants. Carries the offending record ids.
class ValidationError : public std::runtime_error {
 public:
  ValidationError(const std::string& what, std::vector<std::string> record_ids,
                  std::vector<std::string> violations = {})
      : std::runtime_error(what),
        record_ids_(std::move(record_ids)),
        violations_(std::move(violations)) {}

  const std::vector<std::string>& record_ids() const noexcept { return record_ids_; }
  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  std::vector<std::string> record_ids_;
  std::vector<std::string> violations_;
};

/// Network-level failure talking to a backend. Retryable.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Backend answered, but not in the agreed protocol. Fatal.
class ProtocolError : public std::runtime_error {
 public:
  ProtocolError(const std::string& code, const std::string& message)
      : std::runtime_error(code + ": " + message), code_(code) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

/// A backend response parsed fine but breaks a response invariant. Fatal.
class InvariantViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace refiner
