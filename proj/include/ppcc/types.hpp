#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>

namespace ppcc {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using Eigen::MatrixX;
using Eigen::VectorX;
using Complex = std::complex<double>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape or index problems in the caller's input.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Iterations that fail to converge, singular systems, unstable certificates.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Scenario and parameter validation failures.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Graph topology does not permit the requested operation.
class TopologyError : public Error {
 public:
  using Error::Error;
};

}  // namespace ppcc
