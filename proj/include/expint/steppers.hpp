#pragma once

#include "expint/error.hpp"
#include "expint/linsolve.hpp"
#include "expint/numcore.hpp"
#include "expint/tableau.hpp"

#include <functional>
#include <string>

namespace expint {

struct StepperConfig {
  Method method = Method::EPIRK4;
  double h = 1e-2;
  double krylov_tol = 1e-8;
  int krylov_m_init = 10;
  int krylov_m_max = 128;
  double newton_tol = 1e-10;
  int newton_max_iter = 20;
  double gmres_tol = 1e-8;
  int gmres_max_iter = 200;
  bool use_analytic_jacobian = true;

  /// Throws ConfigError unless h and every tolerance are positive.
  void validate() const;
};

/// Work counters. `matvecs` counts Jacobian actions (analytic or finite
/// difference); `rhs_evals` counts direct evaluations of f only.
struct StepReport {
  long steps = 0;
  long matvecs = 0;
  long rhs_evals = 0;
  long newton_iters = 0;
  long gmres_iters = 0;
  long krylov_projections = 0;
  long krylov_substeps = 0;
  long krylov_vectors = 0;
  long ortho_dots = 0;
  long normalizations = 0;
  double wall_time = 0.0;

  StepReport& operator+=(const StepReport& other);
};

struct StepResult {
  StateVector y;
  StepReport report;
};

/// A single step could not be completed (Krylov or Newton failure).
class StepFailure : public Error {
 public:
  StepFailure(const std::string& what, StepReport report)
      : Error(what), report_(report) {}
  const StepReport& report() const { return report_; }

 private:
  StepReport report_;
};

/// Exponential Euler: y + phi_1(hJ) h f(y). One Krylov projection.
StepResult epi2_step(const OdeSystem& system, double t, const StateVector& y,
                     const StepperConfig& cfg);

/// Fourth-order EPIRK with two Krylov projections: one substepped
/// projection for both internal stages, one for the phi_1/phi_3/phi_4
/// combination.
StepResult epirk4_step(const OdeSystem& system, double t, const StateVector& y,
                       const StepperConfig& cfg);

/// Explicit Runge-Kutta step. Throws NumericError on a non-finite stage.
StateVector explicit_rk_step(const OdeSystem& system, double t,
                             const StateVector& y, const ButcherTableau& tab,
                             double h, StepReport* report = nullptr);

/// Diagonally implicit Runge-Kutta step; each stage slope is found by
/// Newton-Krylov on k - f(t + c_i h, y + h sum_{j<i} a_ij k_j + h gamma k).
StepResult sdirk_step(const OdeSystem& system, double t, const StateVector& y,
                      const ButcherTableau& tab, const StepperConfig& cfg);

/// Dispatches on cfg.method.
StepResult step(const OdeSystem& system, double t, const StateVector& y,
                const StepperConfig& cfg);

/// States whose 2-norm exceeds this are treated as diverged.
inline constexpr double kDivergenceNorm = 1e10;

struct IntegrationResult {
  StateVector y;
  StepReport report;
  double t = 0.0;               ///< time reached
  bool diverged = false;        ///< non-finite state or norm > kDivergenceNorm
  bool failed = false;          ///< a stepper raised an error
  bool last_step_shortened = false;
  std::string failure;
};

using Observer =
    std::function<void(double t, const StateVector& y, const StepReport& step)>;

/// Fixed-step driver over [t0, tf]. When the steps do not tile the interval
/// the final step is shortened and flagged. Divergence and stepper failures
/// end the run and are recorded in the result instead of propagating.
IntegrationResult integrate(const OdeSystem& system, const StepperConfig& cfg,
                            double t0, double tf, const StateVector& y0,
                            const Observer& observer = {});

}  // namespace expint
