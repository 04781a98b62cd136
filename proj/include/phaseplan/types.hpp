#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace phaseplan {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Error hierarchy. Every library failure derives from Error so callers
// (the CLI in particular) can map categories onto exit codes.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed arguments: dimension mismatches, bad parameters.
struct InputError : Error {
  using Error::Error;
};

// Argument outside the mathematical domain of an operation.
struct DomainError : Error {
  using Error::Error;
};

// Motor speed beyond the characteristic's envelope.
struct InfeasibleSpeedError : Error {
  using Error::Error;
};

// Path produced non-finite derivatives.
struct PathError : Error {
  using Error::Error;
};

// Configuration or file-format problem.
struct ConfigError : Error {
  using Error::Error;
};

// A planner met a state it cannot leave.
struct PlannerError : Error {
  PlannerError(const std::string& what, std::size_t column)
      : Error(what + " (column " + std::to_string(column) + ")"), column(column) {}
  std::size_t column;
};

// sgn with sgn(0) = 0.
inline double sgn(double x) { return (x > 0.0) - (x < 0.0); }

inline bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace phaseplan
