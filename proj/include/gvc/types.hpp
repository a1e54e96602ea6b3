#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace gvc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Base class of every exception thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A caller-side contract violation detectable from the arguments alone
// (mismatched dimensions, empty required data, out-of-range counts).
struct InvalidArgument : Error {
  using Error::Error;
};

// A dense linear solve whose reciprocal condition estimate fell below the
// configured floor, or whose factorization hit an exactly zero pivot.
struct SingularMatrixError : Error {
  SingularMatrixError(const std::string& what, double rcond_estimate)
      : Error(what), rcond(rcond_estimate) {}
  double rcond;
};

// An iteration (Newton, shooting) that failed to reach tolerance.
struct ConvergenceError : Error {
  ConvergenceError(const std::string& what, int iterations_run, double final_residual)
      : Error(what), iterations(iterations_run), residual(final_residual) {}
  int iterations;
  double residual;
};

// Evaluation outside the declared chart domain of a group or groupoid model.
struct ChartError : Error {
  using Error::Error;
};

// Malformed text input; `position` is a 0-based offset into the source string.
struct ParseError : Error {
  ParseError(const std::string& what, std::size_t pos)
      : Error("at position " + std::to_string(pos) + ": " + what), position(pos) {}
  std::size_t position;
};

// A structurally invalid problem description (bad kind, missing keys,
// inconsistent dimensions).
struct SpecError : Error {
  using Error::Error;
};

// Sampled curve: strictly increasing times, one state row per time, all rows
// of equal width, one label per state component.
struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> states;
  std::vector<std::string> labels;
};

// Throws InvalidArgument if the trajectory violates its shape invariants.
void validate(const Trajectory& trajectory);

}  // namespace gvc
