#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace vectrisk {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;
using IndexList = std::vector<Index>;

/// Base of every error raised by the library. The message is prefixed by the
/// module that raised it, e.g. "data-model: negative count".
class Error : public std::runtime_error {
 public:
  Error(const std::string& module, const std::string& message)
      : std::runtime_error(module + ": " + message), module_(module) {}

  const std::string& module() const noexcept { return module_; }

 private:
  std::string module_;
};

/// Bad input: malformed tables, violated preconditions, unknown names.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// The numbers went wrong: divergence, degenerate models, overflow.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace vectrisk
