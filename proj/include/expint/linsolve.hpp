#pragma once

#include "expint/error.hpp"
#include "expint/kiops.hpp"
#include "expint/numcore.hpp"

#include <functional>
#include <vector>

namespace expint {

struct GmresResult {
  StateVector x;
  int iterations = 0;
  double relative_residual = 0.0;
};

/// GMRES hit its iteration cap (or the Krylov space became invariant)
/// without reaching the tolerance.
class GmresStagnationError : public ConvergenceError {
 public:
  GmresStagnationError(const std::string& what, double achieved, int iterations)
      : ConvergenceError(what), achieved_(achieved), iterations_(iterations) {}
  double achieved_residual() const { return achieved_; }
  int iterations() const { return iterations_; }

 private:
  double achieved_;
  int iterations_;
};

/// Unrestarted, unpreconditioned GMRES with modified Gram-Schmidt and Givens
/// rotations, started from x = 0. Stops when |op(x) - b| <= tol |b|.
GmresResult gmres(const LinearOp& op, const StateVector& b, double tol,
                  int max_iter = 200);

struct NewtonOptions {
  double newton_tol = 1e-10;
  int newton_max_iter = 20;
  double gmres_tol = 1e-8;
  int gmres_max_iter = 200;
};

struct NewtonResult {
  StateVector x;
  int iterations = 0;
  long gmres_iterations = 0;
  long residual_evals = 0;
  long jacobian_actions = 0;
  std::vector<double> residual_history;
};

/// Newton did not reach the tolerance within newton_max_iter iterations.
class NewtonConvergenceError : public ConvergenceError {
 public:
  NewtonConvergenceError(const std::string& what, std::vector<double> trace)
      : ConvergenceError(what), trace_(std::move(trace)) {}
  const std::vector<double>& residual_history() const { return trace_; }

 private:
  std::vector<double> trace_;
};

using Residual = std::function<StateVector(const StateVector&)>;
/// (x, v, G(x)) -> J_G(x) v
using ResidualJacobian = std::function<StateVector(
    const StateVector& x, const StateVector& v, const StateVector& g_of_x)>;

/// Inexact Newton: solve J_G d = -G(x) with GMRES, x += d, until
/// |G(x)| <= newton_tol (1 + |G(x_0)|). A missing Jacobian action falls back
/// to finite differences of G.
NewtonResult newton_krylov_solve(const Residual& residual,
                                 const StateVector& guess,
                                 const NewtonOptions& options,
                                 const ResidualJacobian& jacobian = {});

}  // namespace expint
