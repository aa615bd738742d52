#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace photongate {

/// A numeric argument lies outside the domain of the model.
class RangeError : public std::invalid_argument {
public:
  RangeError(const std::string& field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(field) {}

  [[nodiscard]] const std::string& field() const noexcept { return field_; }

private:
  std::string field_;
};

/// A ratio estimator was asked to divide by a vanishing quantity.
class DivideByZero : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

class ConvergenceError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed input data (time-tag files, counts blocks).
class FormatError : public std::runtime_error {
public:
  explicit FormatError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what
                                : what),
        line_(line) {}

  [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

/// Gate timing violates tau_g < tau_d < tau_r or leaves the pulse period.
class GateError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace photongate
