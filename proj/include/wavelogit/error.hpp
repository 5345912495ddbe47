#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace wavelogit {

// Base of every error raised by the library. The CLI maps subclasses onto
// exit codes: DataError -> 2, NumericalError -> 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input data or parameters: shapes, labels, file contents.
class DataError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public DataError {
 public:
  using DataError::DataError;
};

class ParameterError : public DataError {
 public:
  using DataError::DataError;
};

class ParseError : public DataError {
 public:
  using DataError::DataError;
};

class StratificationError : public DataError {
 public:
  using DataError::DataError;
};

/// Requested more components than the data supports.
class RankError : public DataError {
 public:
  RankError(const std::string& what, int achieved)
      : DataError(what), achieved_(achieved) {}
  int achieved() const { return achieved_; }

 private:
  int achieved_;
};

class SparsityTooStrongError : public DataError {
 public:
  SparsityTooStrongError(const std::string& what, int component)
      : DataError(what), component_(component) {}
  int component() const { return component_; }

 private:
  int component_;
};

/// Solver failures.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class SingularityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SeparationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SelectionError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Iteration cap reached. Carries the last iterate so callers can inspect it.
class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& what, Eigen::VectorXd omega,
                   double intercept, double residual)
      : NumericalError(what),
        omega_(std::move(omega)),
        intercept_(intercept),
        residual_(residual) {}

  const Eigen::VectorXd& omega() const { return omega_; }
  double intercept() const { return intercept_; }
  double residual() const { return residual_; }

 private:
  Eigen::VectorXd omega_;
  double intercept_;
  double residual_;
};

}  // namespace wavelogit
