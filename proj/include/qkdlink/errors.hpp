#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qkdlink {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

/// An inversion (path length, calibration) has no finite solution.
class NoSolutionError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Scenario or configuration rejected by the validator. `line` is 1-based, 0 when unknown.
class ValidationError : public std::runtime_error {
  public:
    ValidationError(std::string field, std::size_t line, const std::string& message)
        : std::runtime_error(message), field_(std::move(field)), line_(line) {}

    const std::string& field() const noexcept { return field_; }
    std::size_t line() const noexcept { return line_; }

  private:
    std::string field_;
    std::size_t line_;
};

}  // namespace qkdlink
