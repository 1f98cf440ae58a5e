#include "expint/densephi.hpp"

#include "expint/error.hpp"

#include <Eigen/LU>

#include <array>
#include <cmath>
#include <string>

namespace expint {

namespace {

// Maximal 1-norms for which the degree-m Pade approximant reaches unit
// roundoff in double precision.
constexpr std::array<double, 5> kTheta = {1.495585217958292e-2,
                                          2.539398330063230e-1,
                                          9.504178996162932e-1,
                                          2.097847961257068e0,
                                          5.371920351148152e0};

constexpr std::array<double, 4> kPade3 = {120.0, 60.0, 12.0, 1.0};
constexpr std::array<double, 6> kPade5 = {30240.0, 15120.0, 3360.0,
                                          420.0,   30.0,    1.0};
constexpr std::array<double, 8> kPade7 = {17297280.0, 8648640.0, 1995840.0,
                                          277200.0,   25200.0,   1512.0,
                                          56.0,       1.0};
constexpr std::array<double, 10> kPade9 = {
    17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
    2162160.0,     110880.0,     3960.0,       90.0,        1.0};
constexpr std::array<double, 14> kPade13 = {64764752532480000.0,
                                            32382376266240000.0,
                                            7771770303897600.0,
                                            1187353796428800.0,
                                            129060195264000.0,
                                            10559470521600.0,
                                            670442572800.0,
                                            33522128640.0,
                                            1323241920.0,
                                            40840800.0,
                                            960960.0,
                                            16380.0,
                                            182.0,
                                            1.0};

double one_norm(const DenseMatrix& a) {
  return a.cwiseAbs().colwise().sum().maxCoeff();
}

// Solves (V - U) X = (V + U) for the low-degree approximants.
template <std::size_t N>
DenseMatrix pade_low(const DenseMatrix& a, const std::array<double, N>& b) {
  const auto n = a.rows();
  const DenseMatrix ident = DenseMatrix::Identity(n, n);
  const DenseMatrix a2 = a * a;
  DenseMatrix power = ident;
  DenseMatrix u_even = b[1] * ident;
  DenseMatrix v = b[0] * ident;
  for (std::size_t k = 2; k < N; k += 2) {
    power = power * a2;
    v += b[k] * power;
    u_even += b[k + 1] * power;
  }
  const DenseMatrix u = a * u_even;
  return (v - u).partialPivLu().solve(v + u);
}

DenseMatrix pade13(const DenseMatrix& a) {
  const auto n = a.rows();
  const auto& b = kPade13;
  const DenseMatrix ident = DenseMatrix::Identity(n, n);
  const DenseMatrix a2 = a * a;
  const DenseMatrix a4 = a2 * a2;
  const DenseMatrix a6 = a4 * a2;
  const DenseMatrix u_inner = a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) +
                              b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident;
  const DenseMatrix u = a * u_inner;
  const DenseMatrix v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) +
                        b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident;
  return (v - u).partialPivLu().solve(v + u);
}

}  // namespace

DenseMatrix expm(const DenseMatrix& a) {
  if (a.rows() != a.cols()) {
    throw DimensionError("expm: matrix is not square (" +
                         std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + ")");
  }
  if (a.size() == 0) return a;
  if (!a.allFinite()) throw NumericError("expm: non-finite input");

  const double norm = one_norm(a);
  DenseMatrix result;
  if (norm <= kTheta[0]) {
    result = pade_low(a, kPade3);
  } else if (norm <= kTheta[1]) {
    result = pade_low(a, kPade5);
  } else if (norm <= kTheta[2]) {
    result = pade_low(a, kPade7);
  } else if (norm <= kTheta[3]) {
    result = pade_low(a, kPade9);
  } else {
    int squarings = 0;
    if (norm > kTheta[4]) {
      squarings = static_cast<int>(std::ceil(std::log2(norm / kTheta[4])));
    }
    result = pade13(a / std::ldexp(1.0, squarings));
    for (int i = 0; i < squarings; ++i) result = result * result;
  }
  if (!result.allFinite()) throw NumericError("expm: overflow");
  return result;
}

DenseMatrix phi_k(const DenseMatrix& a, int k) {
  if (a.rows() != a.cols()) throw DimensionError("phi_k: matrix is not square");
  if (k < 0 || k > kMaxPhiOrder) {
    throw UnsupportedOrderError("phi_k: order " + std::to_string(k) +
                                " outside [0, " +
                                std::to_string(kMaxPhiOrder) + "]");
  }
  if (k == 0) return expm(a);
  const auto n = a.rows();
  const auto big = n * (k + 1);
  DenseMatrix block = DenseMatrix::Zero(big, big);
  block.topLeftCorner(n, n) = a;
  for (int i = 0; i < k; ++i) {
    block.block(i * n, (i + 1) * n, n, n).setIdentity();
  }
  const DenseMatrix e = expm(block);
  return e.topRightCorner(n, n);
}

StateVector phi_combination_dense(const DenseMatrix& a,
                                  std::span<const StateVector> vs) {
  if (a.rows() != a.cols()) {
    throw DimensionError("phi_combination_dense: matrix is not square");
  }
  if (vs.empty()) {
    throw DimensionError("phi_combination_dense: need at least v_0");
  }
  const auto n = a.rows();
  const auto p = static_cast<Eigen::Index>(vs.size()) - 1;
  if (p > kMaxPhiOrder) {
    throw UnsupportedOrderError("phi_combination_dense: too many vectors");
  }
  for (const auto& v : vs) {
    if (v.size() != n) {
      throw DimensionError("phi_combination_dense: vector length mismatch");
    }
  }
  if (p == 0) return expm(a) * vs[0];

  DenseMatrix aug = DenseMatrix::Zero(n + p, n + p);
  aug.topLeftCorner(n, n) = a;
  for (Eigen::Index col = 0; col < p; ++col) {
    aug.block(0, n + col, n, 1) = vs[p - col];
  }
  for (Eigen::Index i = 0; i + 1 < p; ++i) aug(n + i, n + i + 1) = 1.0;

  StateVector start = StateVector::Zero(n + p);
  start.head(n) = vs[0];
  start(n + p - 1) = 1.0;
  return (expm(aug) * start).head(n);
}

}  // namespace expint
