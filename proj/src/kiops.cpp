#include "expint/kiops.hpp"

#include "expint/densephi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace expint {

KrylovWorkspace::KrylovWorkspace(Eigen::Index n_aug, int capacity,
                                 int iop_length_)
    : basis(n_aug, capacity + 1),
      hessenberg(DenseMatrix::Zero(capacity + 1, capacity + 1)),
      iop_length(iop_length_) {}

double KrylovWorkspace::start(const StateVector& start_vector) {
  if (start_vector.size() != basis.rows()) {
    throw DimensionError("KrylovWorkspace::start: length mismatch");
  }
  hessenberg.setZero();
  m = 0;
  happy_breakdown = false;
  beta = start_vector.norm();
  ++normalizations;
  if (beta > 0.0) basis.col(0) = start_vector / beta;
  else basis.col(0).setZero();
  return beta;
}

double KrylovWorkspace::trailing_subdiagonal() const {
  return m > 0 ? hessenberg(m, m - 1) : 0.0;
}

void iop_arnoldi_extend(KrylovWorkspace& ws, const LinearOp& op) {
  if (ws.happy_breakdown) return;
  const int j = ws.m;
  if (j + 1 >= ws.basis.cols()) {
    const auto capacity = 2 * ws.basis.cols();
    ws.basis.conservativeResize(Eigen::NoChange, capacity);
    ws.hessenberg.conservativeResizeLike(DenseMatrix::Zero(capacity, capacity));
  }

  StateVector w = op(ws.basis.col(j));
  ++ws.matvecs;
  if (w.size() != ws.basis.rows()) {
    throw DimensionError("iop_arnoldi_extend: operator changed length");
  }
  if (!w.allFinite()) {
    throw NumericError("iop_arnoldi_extend: non-finite operator output");
  }

  // Modified Gram-Schmidt against the trailing window only.
  double projected_sq = 0.0;
  for (int i = std::max(0, j - ws.iop_length + 1); i <= j; ++i) {
    const double h = ws.basis.col(i).dot(w);
    ++ws.ortho_dots;
    ws.hessenberg(i, j) = h;
    w -= h * ws.basis.col(i);
    projected_sq += h * h;
  }
  const double s = w.norm();
  ++ws.normalizations;
  ws.m = j + 1;

  // |op(v_j)|^2 = s^2 + sum h^2 for an orthonormal window, so the breakdown
  // test costs no extra reduction.
  const double full = std::sqrt(s * s + projected_sq);
  if (s == 0.0 || s <= 1e-14 * full) {
    ws.happy_breakdown = true;
    ws.hessenberg(j + 1, j) = 0.0;
    return;
  }
  ws.hessenberg(j + 1, j) = s;
  ws.basis.col(j + 1) = w / s;
}

DenseMatrix augmented_small_exp(const KrylovWorkspace& ws, double tau) {
  const int m = ws.m;
  DenseMatrix small = DenseMatrix::Zero(m + 1, m + 1);
  small.topLeftCorner(m, m) = tau * ws.hessenberg.topLeftCorner(m, m);
  small(0, m) = tau;
  return expm(small);
}

double krylov_error_estimate(const KrylovWorkspace& ws, double tau,
                             const DenseMatrix& small_exp) {
  (void)tau;
  const int m = ws.m;
  if (m == 0 || ws.happy_breakdown) return 0.0;
  return std::abs(ws.beta * ws.trailing_subdiagonal() * small_exp(m - 1, m));
}

SubstepDecision substep_controller(double err_est, double tol, double tau,
                                   int m, double horizon,
                                   SubstepControllerState& state) {
  SubstepDecision out;
  out.accept = err_est <= tol * tau;

  double factor = kSubstepGrowthMax;
  if (err_est > 0.0) {
    factor = kSubstepSafety * std::pow(tol * tau / err_est, kSubstepExponent);
    factor = std::clamp(factor, kSubstepGrowthMin, kSubstepGrowthMax);
  }
  out.tau_next = tau * factor;

  if (out.accept) {
    if (state.rejected_current) {
      state.first_try_streak = 0;
    } else {
      ++state.first_try_streak;
    }
    state.rejected_current = false;
    out.m_next = m;
    if (state.first_try_streak >= 2) {
      out.m_next = static_cast<int>(std::floor(0.9 * m));
      state.first_try_streak = 0;
    }
    const double remaining = horizon - tau;
    if (remaining > 0.0) out.tau_next = std::min(out.tau_next, remaining);
  } else {
    state.rejected_current = true;
    state.first_try_streak = 0;
    out.m_next = static_cast<int>(std::ceil(4.0 * m / 3.0));
    out.tau_next = std::min(out.tau_next, horizon);
  }
  out.m_next = std::clamp(out.m_next, state.m_min, state.m_max);
  return out;
}

namespace {

void validate(const PhiCombinationTask& task) {
  if (!task.op) throw ConfigError("kiops: operator is empty");
  if (task.vs.empty()) throw DimensionError("kiops: need at least v_0");
  if (static_cast<int>(task.vs.size()) - 1 > kMaxPhiOrder) {
    throw UnsupportedOrderError("kiops: at most " +
                                std::to_string(kMaxPhiOrder + 1) + " vectors");
  }
  const auto n = task.vs[0].size();
  for (const auto& v : task.vs) {
    if (v.size() != n) throw DimensionError("kiops: vector length mismatch");
    if (!v.allFinite()) throw NumericError("kiops: non-finite input vector");
  }
  if (task.taus.empty()) throw ConfigError("kiops: no output points");
  double prev = 0.0;
  for (double tau : task.taus) {
    if (!(tau > prev)) {
      throw ConfigError("kiops: taus must be strictly increasing in (0, 1]");
    }
    prev = tau;
  }
  if (task.taus.back() != 1.0) throw ConfigError("kiops: last tau must be 1");
  if (!(task.tol > 0.0)) throw ConfigError("kiops: tolerance must be positive");
  if (task.m_init < 1 || task.m_init > task.m_max) {
    throw ConfigError("kiops: need 1 <= m_init <= m_max");
  }
  if (task.iop_length < 1) throw ConfigError("kiops: iop_length must be >= 1");
}

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

}  // namespace

KiopsResult kiops_eval(const PhiCombinationTask& task) {
  validate(task);

  const auto n = task.vs[0].size();
  // Trailing zero vectors do not contribute; dropping them shrinks the
  // augmented space.
  int p = static_cast<int>(task.vs.size()) - 1;
  while (p > 0 && task.vs[p].isZero(0.0)) --p;

  // Balance the polynomial tail against the data: B is scaled by 1/mu and
  // the tail by mu, so scaling all inputs scales the augmented vector.
  double mu = 1.0;
  if (p > 0) {
    double max_norm = 0.0;
    for (int i = 1; i <= p; ++i) max_norm = std::max(max_norm, task.vs[i].lpNorm<1>());
    mu = max_norm;
  }
  DenseMatrix b_scaled(n, p);
  for (int col = 0; col < p; ++col) b_scaled.col(col) = task.vs[p - col] / mu;

  const Eigen::Index n_aug = n + p;
  KiopsStats stats;
  LinearOp aug_op = [&](const StateVector& x) {
    StateVector out(n_aug);
    StateVector top = task.op(x.head(n));
    ++stats.matvecs;
    if (top.size() != n) throw DimensionError("kiops: operator changed length");
    out.head(n) = top;
    if (p > 0) {
      out.head(n).noalias() += b_scaled * x.tail(p);
      out.segment(n, p - 1) = x.segment(n + 1, p - 1);
      out(n_aug - 1) = 0.0;
    }
    return out;
  };

  const int m_max = std::max(1, static_cast<int>(std::min<Eigen::Index>(task.m_max, n_aug)));
  SubstepControllerState ctrl;
  ctrl.m_max = m_max;
  ctrl.m_min = std::min(10, m_max);
  int m = std::clamp(task.m_init, 1, m_max);

  KrylovWorkspace ws(n_aug, m_max, task.iop_length);
  std::vector<StateVector> outputs(task.taus.size());
  std::size_t next_out = 0;

  StateVector w_now = task.vs[0];
  double tau_now = 0.0;
  double tau = 1.0;

  auto sync_counters = [&] {
    stats.ortho_dots = ws.ortho_dots;
    stats.normalizations = ws.normalizations;
  };

  while (next_out < outputs.size()) {
    StateVector start(n_aug);
    start.head(n) = w_now;
    for (int k = 0; k < p; ++k) {
      const int power = p - 1 - k;
      start(n + k) = mu * std::pow(tau_now, power) / factorial(power);
    }
    const double beta = ws.start(start);
    if (beta == 0.0) {
      // Zero data stays zero.
      for (; next_out < outputs.size(); ++next_out) outputs[next_out] = w_now;
      break;
    }

    const double horizon = 1.0 - tau_now;
    while (true) {
      while (ws.m < m && !ws.happy_breakdown) {
        const long before = ws.m;
        iop_arnoldi_extend(ws, aug_op);
        stats.krylov_vectors += ws.m - before;
      }
      tau = std::min(tau, horizon);
      const int j = ws.m;
      const DenseMatrix small = augmented_small_exp(ws, tau);
      const double err_abs = krylov_error_estimate(ws, tau, small);

      StateVector candidate =
          beta * (ws.basis.leftCols(j) * small.col(0).head(j));
      if (!candidate.allFinite()) {
        sync_counters();
        throw NumericError("kiops: non-finite substep result");
      }
      double scale = candidate.head(n).norm();
      if (scale == 0.0) scale = beta;
      const double err = err_abs / scale;

      const SubstepDecision decision =
          substep_controller(err, task.tol, tau, m, horizon, ctrl);
      if (decision.accept) {
        const double tau_end = (tau >= horizon) ? 1.0 : tau_now + tau;
        // Outputs strictly inside this substep reuse its Krylov basis.
        while (next_out < outputs.size() && task.taus[next_out] < tau_end) {
          const double local = task.taus[next_out] - tau_now;
          const DenseMatrix inner = expm(local * ws.reduced());
          outputs[next_out] =
              (beta * (ws.basis.leftCols(j) * inner.col(0))).head(n);
          ++next_out;
        }
        w_now = candidate.head(n);
        if (next_out < outputs.size() && task.taus[next_out] == tau_end) {
          outputs[next_out++] = w_now;
        }
        tau_now = tau_end;
        ++stats.substeps;
        stats.krylov_dims.push_back(j);
        tau = decision.tau_next;
        m = decision.m_next;
        break;
      }

      ++stats.rejected;
      if (decision.tau_next < kTauMin) {
        sync_counters();
        throw KiopsConvergenceError(
            "kiops: substep fell below tau_min at tau = " +
                std::to_string(tau_now),
            stats);
      }
      tau = decision.tau_next;
      m = decision.m_next;
    }
  }

  sync_counters();
  return {std::move(outputs), std::move(stats)};
}

}  // namespace expint
