#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace misi {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shape or size mismatch between operands.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Invalid argument or violated precondition.
class ValueError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values, failed convergence, undefined normalizations.
class NumericError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public NumericError {
 public:
  ConvergenceError(const std::string& what, double residual, std::size_t iterations)
      : NumericError(what), residual_(residual), iterations_(iterations) {}
  double residual() const { return residual_; }
  std::size_t iterations() const { return iterations_; }

 private:
  double residual_;
  std::size_t iterations_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Config parse failure; line is 1-based (0 when not tied to a line).
class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, std::size_t line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace misi
