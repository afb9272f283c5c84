#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace fso {

// Argument outside the domain of a special function or model (Gamma pole, zero beam width, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Right and left pole families cannot be separated by a vertical line.
class NonSeparableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Quadrature or truncation did not settle. Carries the last estimate and its error bound.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double estimate, double error_bound)
      : std::runtime_error(what), estimate_(estimate), error_bound_(error_bound) {}
  double estimate() const { return estimate_; }
  double error_bound() const { return error_bound_; }

 private:
  double estimate_;
  double error_bound_;
};

class UnsupportedModeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The dominant pole of an asymptotic expansion is shared by two distinct parameters.
class DegeneratePoleError : public std::runtime_error {
 public:
  DegeneratePoleError(const std::string& what, double pole)
      : std::runtime_error(what), pole_(pole) {}
  double pole() const { return pole_; }

 private:
  double pole_;
};

// Aggregated configuration problems, one entry per offending field path.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> issues)
      : std::runtime_error(join(issues)), issues_(std::move(issues)) {}
  const std::vector<std::string>& issues() const { return issues_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (const auto& s : v) {
      if (!out.empty()) out += "; ";
      out += s;
    }
    return out;
  }
  std::vector<std::string> issues_;
};

}  // namespace fso
