#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace ctxdrift {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;
using IndexList = std::vector<Index>;

/// Invalid shapes, invalid parameter values, bad method/flag combinations.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Data that makes a quantity undefined (zero bandwidth, zero variance, ...).
class DegenerateDataError : public std::runtime_error {
 public:
  explicit DegenerateDataError(const std::string& msg)
      : std::runtime_error(msg) {}
};

/// Factorization or iteration failure with condition diagnostics in the text.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Rejection subsampling retained nothing usable.
class ResampleFailureError : public std::runtime_error {
 public:
  explicit ResampleFailureError(const std::string& msg)
      : std::runtime_error(msg) {}
};

/// Malformed input files; message carries row/column location.
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ConfigError(msg);
}

}  // namespace ctxdrift
