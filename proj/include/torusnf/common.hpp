#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace torusnf {

using cplx = std::complex<double>;
using Eigen::Index;
using Eigen::MatrixXcd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr cplx kI{0.0, 1.0};

/// Base of every error raised by the library. `exit_code()` is what the CLI
/// returns when the error escapes a subcommand.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept { return 2; }
};

/// A modelling hypothesis does not hold: (H1) self-adjointness, (H2) positivity
/// of the potential, (H3) order gap of the lower-order part, or M <= 1.
class HypothesisViolation : public Error {
 public:
  HypothesisViolation(std::string hypothesis, const std::string& what)
      : Error("(" + hypothesis + ") " + what), hypothesis_(std::move(hypothesis)) {}
  const std::string& hypothesis() const noexcept { return hypothesis_; }
  int exit_code() const noexcept override { return 1; }

 private:
  std::string hypothesis_;
};

/// Non-finite values, Newton failure, loss of unitarity and similar.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, double residual = 0.0)
      : Error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Caller broke a precondition (non-hermitian input where one is required,
/// an order-ledger violation in the reduction, ...).
class ContractViolation : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

/// Two objects living on different grids were combined.
class DimensionError : public ContractViolation {
 public:
  using ContractViolation::ContractViolation;
};

/// Malformed configuration or expression text.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line, int column)
      : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }
  int exit_code() const noexcept override { return 1; }

 private:
  int line_;
  int column_;
};

/// Spectral index helpers. Modes are stored in centered order, slot i holding
/// wavenumber xi = i - N/2, so that xi ranges over {-N/2, ..., N/2 - 1}.
inline Index slot_of(Index xi, Index n) { return xi + n / 2; }
inline Index mode_of(Index slot, Index n) { return slot - n / 2; }

inline double japanese_bracket(double xi) { return std::sqrt(1.0 + xi * xi); }

}  // namespace torusnf
