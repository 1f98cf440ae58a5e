#include "expint/linsolve.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace expint {

GmresResult gmres(const LinearOp& op, const StateVector& b, double tol,
                  int max_iter) {
  const auto n = b.size();
  GmresResult result;
  result.x = StateVector::Zero(n);
  const double b_norm = b.norm();
  if (b_norm == 0.0) return result;
  if (!b.allFinite()) throw NumericError("gmres: non-finite right-hand side");

  DenseMatrix basis(n, max_iter + 1);
  DenseMatrix h = DenseMatrix::Zero(max_iter + 1, max_iter);
  StateVector cs = StateVector::Zero(max_iter);
  StateVector sn = StateVector::Zero(max_iter);
  StateVector g = StateVector::Zero(max_iter + 1);

  basis.col(0) = b / b_norm;
  g(0) = b_norm;
  double residual = b_norm;
  int k = 0;
  bool invariant = false;
  while (k < max_iter && residual > tol * b_norm) {
    StateVector w = op(basis.col(k));
    if (w.size() != n) throw DimensionError("gmres: operator changed length");
    if (!w.allFinite()) throw NumericError("gmres: non-finite operator output");
    for (int i = 0; i <= k; ++i) {
      h(i, k) = basis.col(i).dot(w);
      w -= h(i, k) * basis.col(i);
    }
    const double s = w.norm();
    h(k + 1, k) = s;
    for (int i = 0; i < k; ++i) {
      const double tmp = cs(i) * h(i, k) + sn(i) * h(i + 1, k);
      h(i + 1, k) = -sn(i) * h(i, k) + cs(i) * h(i + 1, k);
      h(i, k) = tmp;
    }
    const double r = std::hypot(h(k, k), h(k + 1, k));
    if (r == 0.0) {
      invariant = true;
      break;
    }
    cs(k) = h(k, k) / r;
    sn(k) = h(k + 1, k) / r;
    h(k, k) = r;
    h(k + 1, k) = 0.0;
    g(k + 1) = -sn(k) * g(k);
    g(k) = cs(k) * g(k);
    residual = std::abs(g(k + 1));
    ++k;
    if (s <= std::numeric_limits<double>::min()) {
      invariant = residual > tol * b_norm;
      break;
    }
    basis.col(k) = w / s;
  }

  if (k > 0) {
    const StateVector y = h.topLeftCorner(k, k)
                              .triangularView<Eigen::Upper>()
                              .solve(g.head(k));
    result.x = basis.leftCols(k) * y;
  }
  result.iterations = k;
  result.relative_residual = residual / b_norm;
  if (residual > tol * b_norm || invariant) {
    throw GmresStagnationError(
        "gmres: stagnated after " + std::to_string(k) +
            " iterations, relative residual " +
            std::to_string(result.relative_residual),
        result.relative_residual, k);
  }
  return result;
}

NewtonResult newton_krylov_solve(const Residual& residual,
                                 const StateVector& guess,
                                 const NewtonOptions& options,
                                 const ResidualJacobian& jacobian) {
  NewtonResult out;
  out.x = guess;
  StateVector g = residual(out.x);
  ++out.residual_evals;
  if (!g.allFinite()) throw NumericError("newton: non-finite initial residual");
  const double g0 = g.norm();
  const double target = options.newton_tol * (1.0 + g0);
  out.residual_history.push_back(g0);
  double g_norm = g0;

  while (g_norm > target) {
    if (out.iterations >= options.newton_max_iter) {
      throw NewtonConvergenceError(
          "newton: no convergence in " + std::to_string(out.iterations) +
              " iterations, |G| = " + std::to_string(g_norm),
          out.residual_history);
    }
    LinearOp jv = [&](const StateVector& v) {
      ++out.jacobian_actions;
      if (jacobian) return jacobian(out.x, v, g);
      // Finite-difference fallback on the residual itself.
      const double v_norm = v.norm();
      if (v_norm == 0.0) return StateVector(StateVector::Zero(v.size()));
      const double delta = std::sqrt(std::numeric_limits<double>::epsilon()) *
                           std::max(1.0, out.x.norm()) / v_norm;
      ++out.residual_evals;
      return StateVector((residual(out.x + delta * v) - g) / delta);
    };
    const GmresResult lin = gmres(jv, -g, options.gmres_tol, options.gmres_max_iter);
    out.gmres_iterations += lin.iterations;
    out.x += lin.x;
    ++out.iterations;
    g = residual(out.x);
    ++out.residual_evals;
    if (!g.allFinite()) {
      throw NumericError("newton: non-finite residual after iteration " +
                         std::to_string(out.iterations));
    }
    g_norm = g.norm();
    out.residual_history.push_back(g_norm);
  }
  return out;
}

}  // namespace expint
