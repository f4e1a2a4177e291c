#pragma once

#include <stdexcept>
#include <string>

namespace fusionkit {

/// Bad inputs: malformed files, dimension mismatches, violated preconditions.
/// The CLI maps these to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical breakdown inside an otherwise valid computation (singular
/// matrices, non-finite likelihoods, lost positive definiteness).
/// The CLI maps these to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fusionkit
