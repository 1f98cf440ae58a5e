#include "expint/numcore.hpp"

#include "expint/error.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace expint {

namespace {

void require_same_length(const StateVector& x, const StateVector& y,
                         const char* what) {
  if (x.size() != y.size()) {
    throw DimensionError(std::string(what) + ": length mismatch (" +
                         std::to_string(x.size()) + " vs " +
                         std::to_string(y.size()) + ")");
  }
}

}  // namespace

StateVector axpy(double a, const StateVector& x, const StateVector& y) {
  require_same_length(x, y, "axpy");
  return a * x + y;
}

double l2_norm(const StateVector& x) { return x.norm(); }

double grid_l2_norm(const StateVector& x, double cell_volume) {
  return std::sqrt(cell_volume * x.squaredNorm());
}

bool all_finite(const StateVector& x) { return x.allFinite(); }

StateVector jac_vec_fd(const OdeSystem& system, double t, const StateVector& y,
                       const StateVector& v, const StateVector& f_of_y) {
  require_same_length(y, v, "jac_vec_fd");
  require_same_length(y, f_of_y, "jac_vec_fd");
  const double v_norm = v.norm();
  if (v_norm == 0.0) return StateVector::Zero(v.size());

  const double sqrt_eps = std::sqrt(std::numeric_limits<double>::epsilon());
  const double delta =
      sqrt_eps * std::max(1.0, y.norm()) /
      std::max(v_norm, std::numeric_limits<double>::min());

  StateVector perturbed = y + delta * v;
  StateVector f_pert = system.rhs(t, perturbed);
  if (f_pert.size() != y.size()) {
    throw DimensionError("jac_vec_fd: rhs returned wrong length");
  }
  if (!f_pert.allFinite()) {
    throw NumericError("jac_vec_fd: non-finite rhs at perturbed state");
  }
  return (f_pert - f_of_y) / delta;
}

StateVector jac_vec(const OdeSystem& system, double t, const StateVector& y,
                    const StateVector& v, const StateVector& f_of_y,
                    bool prefer_analytic) {
  if (prefer_analytic && system.has_jacobian()) {
    StateVector out = system.jac_action(y, v, f_of_y);
    if (!out.allFinite()) throw NumericError("jac_action: non-finite result");
    return out;
  }
  return jac_vec_fd(system, t, y, v, f_of_y);
}

OdeSystem autonomize(const OdeSystem& system) {
  OdeSystem out;
  out.dim = system.dim + 1;
  out.name = system.name + " (autonomized)";
  out.autonomous = true;
  const auto n = system.dim;
  out.rhs = [rhs = system.rhs, n](double, const StateVector& z) {
    if (z.size() != n + 1) {
      throw DimensionError("autonomized rhs: length mismatch");
    }
    StateVector dz(n + 1);
    dz.head(n) = rhs(z(n), z.head(n));
    dz(n) = 1.0;
    return dz;
  };
  // Central differences: the EPIRK4 remainder weights amplify Jacobian
  // errors by ~1e4, so the one-sided sqrt(eps) action is not accurate enough.
  out.jac_action = [rhs = out.rhs](const StateVector& z, const StateVector& v,
                                   const StateVector&) -> StateVector {
    const double v_norm = v.norm();
    if (v_norm == 0.0) return StateVector::Zero(v.size());
    const double delta = std::cbrt(std::numeric_limits<double>::epsilon()) *
                         std::max(1.0, z.norm()) / v_norm;
    StateVector jv = (rhs(0.0, z + delta * v) - rhs(0.0, z - delta * v)) / (2.0 * delta);
    if (!jv.allFinite()) throw NumericError("autonomized jacobian: non-finite value");
    return jv;
  };
  return out;
}

}  // namespace expint
