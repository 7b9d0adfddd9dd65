#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace hais {

/// Caller broke an API precondition (dimension mismatch, invalid config).
struct ContractViolation : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Bad user-supplied data (files, images, matrices).
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Hamiltonian dynamics produced a non-finite gradient or state.
/// Carries the offending position and, when raised inside an annealing run,
/// the mixing fraction and particle it happened at.
struct NonFiniteDynamics : std::runtime_error {
  NonFiniteDynamics(std::string msg, Eigen::VectorXd where)
      : std::runtime_error(std::move(msg)), position(std::move(where)) {}

  Eigen::VectorXd position;
  double beta = -1.0;
  int particle = -1;
};

}  // namespace hais
