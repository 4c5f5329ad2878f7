#ifndef MVHMM_TYPES_HPP
#define MVHMM_TYPES_HPP

#include <Eigen/Dense>

#include <array>
#include <charconv>
#include <stdexcept>
#include <string>

namespace mvhmm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using IndexMatrix = Eigen::MatrixXi;

/// Shortest decimal text that reads back to exactly `v`.
inline std::string format_real(double v) {
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (panel files, report files).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Incomplete or duplicated panel cells.
class PanelError : public Error {
 public:
  using Error::Error;
};

/// A value outside the domain of a transform.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Index out of range.
class BoundsError : public Error {
 public:
  using Error::Error;
};

/// A covariance (or scatter) that failed the positive-definiteness gate.
/// `which()` names the offending matrix ("Sigma", "Psi", "scatter", ...).
class DecompositionError : public Error {
 public:
  DecompositionError(std::string which, const std::string& what)
      : Error(what), which_(std::move(which)) {}
  const std::string& which() const noexcept { return which_; }

 private:
  std::string which_;
};

/// A hidden state whose posterior weight vanished.
class EmptyStateError : public Error {
 public:
  EmptyStateError(int state, double weight, const std::string& what)
      : Error(what), state_(state), weight_(weight) {}
  int state() const noexcept { return state_; }
  double weight() const noexcept { return weight_; }

 private:
  int state_;
  double weight_;
};

/// Non-finite quantity during estimation.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Every short-EM start failed.
class FitFailure : public Error {
 public:
  using Error::Error;
};

/// Invalid user request (bad structure name, bad grid, ...).
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace mvhmm

#endif  // MVHMM_TYPES_HPP
