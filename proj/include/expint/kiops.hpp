#pragma once

#include "expint/error.hpp"
#include "expint/numcore.hpp"

#include <functional>
#include <vector>

namespace expint {

/// Matrix-free linear operator v -> A v.
using LinearOp = std::function<StateVector(const StateVector&)>;

/// One request to the phi-combination engine:
///   w(tau) = sum_{i=0}^{p} tau^i phi_i(tau A) v_i   for every tau in `taus`.
struct PhiCombinationTask {
  LinearOp op;                   ///< v -> A v, A is typically h*J
  std::vector<StateVector> vs;   ///< v_0 .. v_p, p <= kMaxPhiOrder
  std::vector<double> taus{1.0}; ///< strictly increasing, last == 1
  double tol = 1e-8;             ///< relative tolerance
  int m_init = 10;
  int m_max = 128;
  int iop_length = 2;
};

struct KiopsStats {
  long matvecs = 0;
  long substeps = 0;
  long rejected = 0;
  long krylov_vectors = 0;   ///< basis vectors appended by the Arnoldi process
  long ortho_dots = 0;       ///< inner products spent on orthogonalization
  long normalizations = 0;   ///< 2-norms of new or starting vectors
  std::vector<int> krylov_dims;  ///< accepted Krylov dimension per substep
};

struct KiopsResult {
  std::vector<StateVector> w;  ///< one vector per requested tau
  KiopsStats stats;
};

/// Substepping could not meet the tolerance. Carries the statistics so far.
class KiopsConvergenceError : public ConvergenceError {
 public:
  KiopsConvergenceError(const std::string& what, KiopsStats stats)
      : ConvergenceError(what), stats_(std::move(stats)) {}
  const KiopsStats& stats() const { return stats_; }

 private:
  KiopsStats stats_;
};

/// Arnoldi basis and (incomplete) Hessenberg projection.
struct KrylovWorkspace {
  DenseMatrix basis;       ///< n_aug x capacity, columns 0..m valid
  DenseMatrix hessenberg;  ///< capacity x capacity, columns 0..m-1 valid
  int m = 0;               ///< number of Arnoldi steps taken
  double beta = 0.0;       ///< norm of the starting vector
  int iop_length = 2;
  bool happy_breakdown = false;
  long ortho_dots = 0;
  long normalizations = 0;
  long matvecs = 0;

  KrylovWorkspace(Eigen::Index n_aug, int capacity, int iop_length = 2);

  /// Resets the workspace around `start`. Returns beta.
  double start(const StateVector& start_vector);

  /// Reduced Hessenberg matrix H_m (m x m).
  DenseMatrix reduced() const { return hessenberg.topLeftCorner(m, m); }

  /// Subdiagonal entry h_{m+1,m}.
  double trailing_subdiagonal() const;
};

/// Appends one basis vector: w = op(v_m), orthogonalized against the last
/// `iop_length` basis vectors only. Flags a happy breakdown when w vanishes
/// relative to |op(v_m)|.
void iop_arnoldi_extend(KrylovWorkspace& ws, const LinearOp& op);

/// exp of the (m+1)x(m+1) matrix [[tau H_m, tau e_1], [0, 0]]. Its first
/// column holds exp(tau H_m) e_1 and its last column tau phi_1(tau H_m) e_1.
DenseMatrix augmented_small_exp(const KrylovWorkspace& ws, double tau);

/// Residual-style estimate beta |h_{m+1,m}| |(small_exp)_{m, m+1}|.
double krylov_error_estimate(const KrylovWorkspace& ws, double tau,
                             const DenseMatrix& small_exp);

struct SubstepDecision {
  bool accept = false;
  double tau_next = 0.0;
  int m_next = 0;
};

/// Cross-substep memory of the Krylov size controller.
struct SubstepControllerState {
  int m_min = 10;
  int m_max = 128;
  int first_try_streak = 0;
  bool rejected_current = false;
};

inline constexpr double kSubstepGrowthMax = 5.0;
inline constexpr double kSubstepGrowthMin = 0.2;
inline constexpr double kSubstepSafety = 0.9;
inline constexpr double kSubstepExponent = 0.25;
inline constexpr double kTauMin = 1e-6;

/// Accepts when err_est <= tol * tau. The proposed next substep is clipped
/// to `horizon`, the distance from the start of the current substep to the
/// end of the integration interval.
SubstepDecision substep_controller(double err_est, double tol, double tau,
                                   int m, double horizon,
                                   SubstepControllerState& state);

/// Evaluates the phi-combination at every requested tau with one Krylov
/// projection (substepped, incomplete orthogonalization, augmented operator).
KiopsResult kiops_eval(const PhiCombinationTask& task);

}  // namespace expint
