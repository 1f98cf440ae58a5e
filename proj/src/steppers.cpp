#include "expint/steppers.hpp"

#include "expint/kiops.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <string>

namespace expint {

void StepperConfig::validate() const {
  if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("step size must be positive");
  if (!(krylov_tol > 0.0)) throw ConfigError("krylov_tol must be positive");
  if (!(newton_tol > 0.0)) throw ConfigError("newton_tol must be positive");
  if (!(gmres_tol > 0.0)) throw ConfigError("gmres_tol must be positive");
  if (newton_max_iter < 1 || gmres_max_iter < 1) {
    throw ConfigError("iteration caps must be positive");
  }
  if (krylov_m_init < 1 || krylov_m_init > krylov_m_max) {
    throw ConfigError("need 1 <= krylov_m_init <= krylov_m_max");
  }
}

StepReport& StepReport::operator+=(const StepReport& o) {
  steps += o.steps;
  matvecs += o.matvecs;
  rhs_evals += o.rhs_evals;
  newton_iters += o.newton_iters;
  gmres_iters += o.gmres_iters;
  krylov_projections += o.krylov_projections;
  krylov_substeps += o.krylov_substeps;
  krylov_vectors += o.krylov_vectors;
  ortho_dots += o.ortho_dots;
  normalizations += o.normalizations;
  wall_time += o.wall_time;
  return *this;
}

namespace {

StateVector eval_rhs(const OdeSystem& system, double t, const StateVector& y,
                     StepReport& report) {
  StateVector f = system.rhs(t, y);
  ++report.rhs_evals;
  if (f.size() != y.size()) throw DimensionError("rhs returned wrong length");
  if (!f.allFinite()) throw NumericError("rhs returned non-finite values");
  return f;
}

void absorb(StepReport& report, const KiopsStats& stats) {
  ++report.krylov_projections;
  report.krylov_substeps += stats.substeps;
  report.krylov_vectors += stats.krylov_vectors;
  report.ortho_dots += stats.ortho_dots;
  report.normalizations += stats.normalizations;
}

KiopsResult run_projection(PhiCombinationTask task, const StepperConfig& cfg,
                           StepReport& report) {
  task.tol = cfg.krylov_tol;
  task.m_init = cfg.krylov_m_init;
  task.m_max = cfg.krylov_m_max;
  try {
    KiopsResult res = kiops_eval(task);
    absorb(report, res.stats);
    return res;
  } catch (const KiopsConvergenceError& e) {
    absorb(report, e.stats());
    throw StepFailure(e.what(), report);
  }
}

// Exponential steppers work on autonomous systems; time-dependent ones are
// lifted to [y; t] and projected back.
template <typename Fn>
StepResult with_autonomous(const OdeSystem& system, double t,
                           const StateVector& y, Fn&& fn) {
  if (system.autonomous) return fn(system, y);
  const OdeSystem lifted = autonomize(system);
  StateVector z(y.size() + 1);
  z.head(y.size()) = y;
  z(y.size()) = t;
  StepResult res = fn(lifted, z);
  res.y = StateVector(res.y.head(y.size()));
  return res;
}

StepResult epi2_autonomous(const OdeSystem& system, double t,
                           const StateVector& y, const StepperConfig& cfg) {
  StepResult out;
  StepReport& rep = out.report;
  const double h = cfg.h;
  const StateVector f_n = eval_rhs(system, t, y, rep);

  PhiCombinationTask task;
  task.op = [&](const StateVector& v) {
    ++rep.matvecs;
    return StateVector(h * jac_vec(system, t, y, v, f_n, cfg.use_analytic_jacobian));
  };
  task.vs = {StateVector::Zero(y.size()), h * f_n};
  task.taus = {1.0};
  const KiopsResult res = run_projection(std::move(task), cfg, rep);
  out.y = y + res.w.back();
  return out;
}

// Stage coefficients of the fourth-order two-projection EPIRK scheme.
constexpr double kAlpha31 = -1024.0;
constexpr double kAlpha32 = 1458.0;
constexpr double kAlpha41 = 27648.0;
constexpr double kAlpha42 = -34992.0;

StepResult epirk4_autonomous(const OdeSystem& system, double t,
                             const StateVector& y, const StepperConfig& cfg) {
  StepResult out;
  StepReport& rep = out.report;
  const double h = cfg.h;
  const StateVector f_n = eval_rhs(system, t, y, rep);
  auto jv = [&](const StateVector& v) {
    ++rep.matvecs;
    return jac_vec(system, t, y, v, f_n, cfg.use_analytic_jacobian);
  };

  // Both stages from one substepped projection of A = (h/8) J: at tau = 8/9
  // and tau = 1 it yields (1/9) phi_1(hJ/9) h f and (1/8) phi_1(hJ/8) h f.
  PhiCombinationTask stages;
  stages.op = [&](const StateVector& v) { return StateVector(h / 8.0 * jv(v)); };
  stages.vs = {StateVector::Zero(y.size()), h / 8.0 * f_n};
  stages.taus = {8.0 / 9.0, 1.0};
  const KiopsResult s = run_projection(std::move(stages), cfg, rep);
  const StateVector y1 = y + s.w[1];
  const StateVector y2 = y + s.w[0];

  auto remainder = [&](const StateVector& stage, double c) {
    const StateVector diff = stage - y;
    return StateVector(eval_rhs(system, t + c * h, stage, rep) - f_n - jv(diff));
  };
  const StateVector r1 = remainder(y1, 1.0 / 8.0);
  const StateVector r2 = remainder(y2, 1.0 / 9.0);

  PhiCombinationTask combo;
  combo.op = [&](const StateVector& v) { return StateVector(h * jv(v)); };
  combo.vs = {StateVector::Zero(y.size()), h * f_n, StateVector::Zero(y.size()),
              h * (kAlpha31 * r1 + kAlpha32 * r2),
              h * (kAlpha41 * r1 + kAlpha42 * r2)};
  combo.taus = {1.0};
  const KiopsResult c = run_projection(std::move(combo), cfg, rep);
  out.y = y + c.w.back();
  return out;
}

}  // namespace

StepResult epi2_step(const OdeSystem& system, double t, const StateVector& y,
                     const StepperConfig& cfg) {
  return with_autonomous(system, t, y,
                         [&](const OdeSystem& sys, const StateVector& z) {
                           return epi2_autonomous(sys, t, z, cfg);
                         });
}

StepResult epirk4_step(const OdeSystem& system, double t, const StateVector& y,
                       const StepperConfig& cfg) {
  return with_autonomous(system, t, y,
                         [&](const OdeSystem& sys, const StateVector& z) {
                           return epirk4_autonomous(sys, t, z, cfg);
                         });
}

StateVector explicit_rk_step(const OdeSystem& system, double t,
                             const StateVector& y, const ButcherTableau& tab,
                             double h, StepReport* report) {
  if (!tab.is_explicit()) {
    throw ConfigError(tab.name + " is not an explicit tableau");
  }
  StepReport local;
  StepReport& rep = report ? *report : local;
  const int s = tab.stages();
  std::vector<StateVector> k(s);
  StateVector stage(y.size());
  for (int i = 0; i < s; ++i) {
    stage = y;
    for (int j = 0; j < i; ++j) {
      if (tab.a(i, j) != 0.0) stage += h * tab.a(i, j) * k[j];
    }
    k[i] = system.rhs(t + tab.c(i) * h, stage);
    ++rep.rhs_evals;
    if (k[i].size() != y.size()) throw DimensionError("rhs returned wrong length");
    if (!k[i].allFinite()) {
      throw NumericError(tab.name + ": non-finite stage " + std::to_string(i));
    }
  }
  StateVector next = y;
  for (int i = 0; i < s; ++i) {
    if (tab.b(i) != 0.0) next += h * tab.b(i) * k[i];
  }
  return next;
}

StepResult sdirk_step(const OdeSystem& system, double t, const StateVector& y,
                      const ButcherTableau& tab, const StepperConfig& cfg) {
  if (!tab.is_diagonally_implicit()) {
    throw ConfigError(tab.name + " is not a diagonally implicit tableau");
  }
  StepResult out;
  StepReport& rep = out.report;
  const double h = cfg.h;
  const double gamma = tab.gamma();
  const NewtonOptions opts{cfg.newton_tol, cfg.newton_max_iter, cfg.gmres_tol,
                           cfg.gmres_max_iter};

  const int s = tab.stages();
  std::vector<StateVector> k(s);
  StateVector guess = eval_rhs(system, t, y, rep);
  for (int i = 0; i < s; ++i) {
    StateVector base = y;
    for (int j = 0; j < i; ++j) base += h * tab.a(i, j) * k[j];
    const double ti = t + tab.c(i) * h;

    // G(k) = k - f(ti, base + h gamma k);  J_G v = v - h gamma J(Z) v.
    Residual residual = [&](const StateVector& ki) {
      return StateVector(ki - system.rhs(ti, base + h * gamma * ki));
    };
    ResidualJacobian jacobian = [&](const StateVector& ki, const StateVector& v,
                                    const StateVector& g) {
      const StateVector z = base + h * gamma * ki;
      const StateVector f_z = ki - g;
      return StateVector(
          v - h * gamma * jac_vec(system, ti, z, v, f_z, cfg.use_analytic_jacobian));
    };
    try {
      NewtonResult nr = newton_krylov_solve(residual, guess, opts, jacobian);
      rep.rhs_evals += nr.residual_evals;
      rep.matvecs += nr.jacobian_actions;
      rep.newton_iters += nr.iterations;
      rep.gmres_iters += nr.gmres_iterations;
      k[i] = std::move(nr.x);
    } catch (const NewtonConvergenceError& e) {
      std::string trace;
      for (double r : e.residual_history()) trace += " " + std::to_string(r);
      throw StepFailure(tab.name + " stage " + std::to_string(i) + ": " +
                            e.what() + "; residuals:" + trace,
                        rep);
    } catch (const ConvergenceError& e) {
      throw StepFailure(tab.name + " stage " + std::to_string(i) + ": " + e.what(),
                        rep);
    }
    guess = k[i];
  }
  out.y = y;
  for (int i = 0; i < s; ++i) out.y += h * tab.b(i) * k[i];
  return out;
}

StepResult step(const OdeSystem& system, double t, const StateVector& y,
                const StepperConfig& cfg) {
  switch (method_family(cfg.method)) {
    case MethodFamily::Exponential:
      return cfg.method == Method::EPI2 ? epi2_step(system, t, y, cfg)
                                       : epirk4_step(system, t, y, cfg);
    case MethodFamily::Explicit: {
      StepResult out;
      out.y = explicit_rk_step(system, t, y, tableau_for(cfg.method), cfg.h,
                               &out.report);
      return out;
    }
    case MethodFamily::Implicit:
      return sdirk_step(system, t, y, tableau_for(cfg.method), cfg);
  }
  throw ConfigError("unknown method family");
}

IntegrationResult integrate(const OdeSystem& system, const StepperConfig& cfg,
                            double t0, double tf, const StateVector& y0,
                            const Observer& observer) {
  cfg.validate();
  if (y0.size() != system.dim) throw DimensionError("integrate: y0 has wrong length");
  if (tf < t0) throw ConfigError("integrate: tf < t0");

  IntegrationResult out;
  out.y = y0;
  out.t = t0;
  if (tf == t0) return out;

  // Number of full steps; a few ulps of slack absorb the rounding in
  // (tf - t0) / h for step counts such as h = T / N.
  const double span = tf - t0;
  const double quotient = span / cfg.h;
  const double nearest = std::round(quotient);
  long full_steps;
  if (nearest >= 1.0 &&
      std::abs(quotient - nearest) <=
          8.0 * std::numeric_limits<double>::epsilon() * nearest) {
    full_steps = static_cast<long>(nearest);
  } else {
    full_steps = static_cast<long>(std::floor(quotient));
    out.last_step_shortened = true;
  }
  const long total = full_steps + (out.last_step_shortened ? 1 : 0);

  StepperConfig step_cfg = cfg;
  for (long n = 0; n < total; ++n) {
    const double t = t0 + static_cast<double>(n) * cfg.h;
    const bool last = (n + 1 == total);
    step_cfg.h = last ? (tf - t) : cfg.h;
    if (!(step_cfg.h > 0.0)) break;

    const auto start = std::chrono::steady_clock::now();
    StepResult res;
    try {
      res = step(system, t, out.y, step_cfg);
    } catch (const StepFailure& e) {
      out.report += e.report();
      out.failed = true;
      out.failure = e.what();
      return out;
    } catch (const NumericError& e) {
      out.diverged = true;
      out.failure = e.what();
      return out;
    } catch (const ConvergenceError& e) {
      out.failed = true;
      out.failure = e.what();
      return out;
    }
    res.report.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    res.report.steps = 1;
    out.report += res.report;
    out.y = std::move(res.y);
    out.t = last ? tf : t0 + static_cast<double>(n + 1) * cfg.h;
    if (observer) observer(out.t, out.y, res.report);
    if (!out.y.allFinite() || out.y.norm() > kDivergenceNorm) {
      out.diverged = true;
      out.failure = "state diverged at t = " + std::to_string(out.t);
      return out;
    }
  }
  return out;
}

}  // namespace expint
