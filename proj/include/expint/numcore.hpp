#pragma once

#include <Eigen/Dense>

#include <functional>
#include <string>

namespace expint {

/// Flat vector of degrees of freedom.
using StateVector = Eigen::VectorXd;
/// Small dense row/column matrix used by the phi-function kernels.
using DenseMatrix = Eigen::MatrixXd;

/// Right-hand side of an autonomous-or-not ODE system y' = f(t, y).
///
/// `jac_action` is optional; when empty, Jacobian actions fall back to
/// one-sided finite differences (see jac_vec_fd).
struct OdeSystem {
  using Rhs = std::function<StateVector(double t, const StateVector& y)>;
  using JacAction = std::function<StateVector(
      const StateVector& y, const StateVector& v, const StateVector& f_of_y)>;

  Eigen::Index dim = 0;
  Rhs rhs;
  JacAction jac_action;
  std::string name;
  /// f does not depend on t. Exponential steppers integrate non-autonomous
  /// systems in the time-augmented form (see autonomize).
  bool autonomous = false;

  bool has_jacobian() const { return static_cast<bool>(jac_action); }
};

/// Returns a*x + y. Throws DimensionError on length mismatch.
StateVector axpy(double a, const StateVector& x, const StateVector& y);

double l2_norm(const StateVector& x);

/// Discrete L2 norm: sqrt(cell_volume * sum x_i^2).
double grid_l2_norm(const StateVector& x, double cell_volume);

/// True when every entry is finite.
bool all_finite(const StateVector& x);

/// Finite-difference Jacobian action (f(y + d v) - f(y)) / d with
/// d = sqrt(eps) * max(1, |y|) / max(|v|, tiny). Returns exact zero for v = 0.
StateVector jac_vec_fd(const OdeSystem& system, double t, const StateVector& y,
                       const StateVector& v, const StateVector& f_of_y);

/// Analytic action when the system provides one and `prefer_analytic` is set,
/// finite differences otherwise.
StateVector jac_vec(const OdeSystem& system, double t, const StateVector& y,
                    const StateVector& v, const StateVector& f_of_y,
                    bool prefer_analytic);

/// Equivalent autonomous system of dimension dim + 1 for z = [y; t]:
/// z' = [f(t, y); 1]. The Jacobian action of the result uses central
/// differences of the augmented right-hand side, since `jac_action` carries
/// no time argument.
OdeSystem autonomize(const OdeSystem& system);

}  // namespace expint
