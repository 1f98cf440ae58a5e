#pragma once

#include "expint/numcore.hpp"

#include <span>

namespace expint {

/// Highest phi-function index supported by the dense kernels and by KIOPS.
inline constexpr int kMaxPhiOrder = 8;

/// Matrix exponential by scaling and squaring with diagonal Pade
/// approximants of degree 3, 5, 7, 9 or 13 (Higham 2005 selection).
DenseMatrix expm(const DenseMatrix& a);

/// phi_k(A) for 0 <= k <= kMaxPhiOrder.
///
/// Evaluated as the top-right block of exp of the block matrix with A in the
/// leading block and identities on the block superdiagonal, so singular A is
/// handled without any division.
DenseMatrix phi_k(const DenseMatrix& a, int k);

/// sum_{i=0}^{p} phi_i(A) v_i through a single exponential of the
/// (n+p)x(n+p) augmented matrix [[A, B], [0, K]], B = [v_p | ... | v_1].
StateVector phi_combination_dense(const DenseMatrix& a,
                                  std::span<const StateVector> vs);

}  // namespace expint
