#pragma once

#include "expint/numcore.hpp"

#include <array>
#include <optional>
#include <vector>

namespace expint {

using Vec2 = std::array<double, 2>;

/// Gaussian source exp(-((x - 1/2) / sigma)^2 / 2).
double source_gaussian(double x, double sigma);

/// Nonlinear flux potential g(u) = beta1 u + (2/7) beta2 sign(u)|u|^{7/2}.
double g_flux(double u, double beta1, double beta2);

/// g'(u) = beta1 + beta2 |u|^{5/2}, the diffusivity mu(|u|).
double g_flux_derivative(double u, double beta1, double beta2);

// ---------------------------------------------------------------------------
// 1D: u_t = (g(u))_xx + s(x) on [0, 1], u(0) = u(1) = 0.
// Unknowns are the interior nodes x_i = i dx, i = 1..n_elem-1, dx = 1/n_elem.

struct Diffusion1DParams {
  double beta1 = 5e-5;
  double beta2 = 5e-3;
  double sigma = 0.05;
  int n_elem = 50;
  /// Initial condition u(x, 0) = initial_scale * s(x).
  double initial_scale = 0.0;

  void validate() const;
  Eigen::Index dim() const { return n_elem - 1; }
  double dx() const { return 1.0 / n_elem; }
};

StateVector rhs_1d(const Diffusion1DParams& params, double t, const StateVector& y);

/// J v = D2 (g'(u) .* v) with D2 the Dirichlet second-difference stencil.
StateVector jac_action_1d(const Diffusion1DParams& params, const StateVector& y,
                          const StateVector& v);

StateVector initial_state_1d(const Diffusion1DParams& params);

OdeSystem make_diffusion_1d(const Diffusion1DParams& params);

// ---------------------------------------------------------------------------
// 2D: u_t = kappa [div((b b^T) grad g(u)) + div(eps_perp (I - b b^T) grad u)]
//           + s(x)
// on [0, 1]^2 with homogeneous Dirichlet data. Interior node (i, j),
// 1 <= i, j <= n_side - 1, has index (j - 1)(n_side - 1) + (i - 1).

struct TwoWireField {
  std::array<Vec2, 2> positions{{{0.25, 0.5}, {0.75, 0.5}}};
  std::array<double, 2> strengths{1.0, 1.0};

  /// Unit field direction at p: superposed azimuthal fields of two
  /// out-of-plane wires, normalized. Throws SingularPointError within 1e-9
  /// of a wire or where the superposed field vanishes.
  Vec2 operator()(const Vec2& p) const;
};

/// Free-function form of TwoWireField::operator().
Vec2 two_wire_field(const Vec2& p, const TwoWireField& field = {});

struct Diffusion2DParams {
  double kappa = 1e-2;
  double eps_perp = 1e-3;
  double beta1 = 0.0;
  double beta2 = 10.0;
  double sigma = 0.05;
  int n_side = 20;
  TwoWireField field;
  /// Replaces the wire field by a constant unit direction when set.
  std::optional<Vec2> uniform_field;
  double initial_scale = 0.0;

  void validate() const;
  Eigen::Index dim() const {
    return static_cast<Eigen::Index>(n_side - 1) * (n_side - 1);
  }
  double dx() const { return 1.0 / n_side; }
};

/// Symmetric nine-point discretization of -div(D grad .) for a
/// cell-centered tensor field D. Normal face fluxes use the average of the
/// two adjacent cell tensors; the off-diagonal part acts through cell-center
/// gradients built from the four cell corners.
class AnisotropicStencil {
 public:
  /// `tensor(i, j)` returns {Dxx, Dyy, Dxy} for cell (i, j), 0 <= i, j < n.
  template <typename TensorFn>
  AnisotropicStencil(int n_side, TensorFn&& tensor);

  /// out += scale * div(D grad phi) at every interior node.
  void apply_add(const StateVector& phi, double scale, StateVector& out) const;

  int n_side() const { return n_; }

 private:
  int n_;
  double inv_dx2_;
  std::vector<double> face_x_;  // (n) x (n+1): face between (i,j),(i+1,j)
  std::vector<double> face_y_;  // (n+1) x (n): face between (i,j),(i,j+1)
  std::vector<double> cross_;   // n x n: Dxy per cell
};

class Diffusion2D {
 public:
  explicit Diffusion2D(Diffusion2DParams params);

  StateVector rhs(double t, const StateVector& y) const;
  StateVector jac_action(const StateVector& y, const StateVector& v) const;
  StateVector initial_state() const;
  OdeSystem system() const;

  const Diffusion2DParams& params() const { return params_; }
  const StateVector& source() const { return source_; }
  Vec2 field_at(const Vec2& p) const;

 private:
  Diffusion2DParams params_;
  std::optional<AnisotropicStencil> parallel_;
  std::optional<AnisotropicStencil> perpendicular_;
  StateVector source_;
};

StateVector rhs_2d(const Diffusion2DParams& params, double t, const StateVector& y);
StateVector jac_action_2d(const Diffusion2DParams& params, const StateVector& y,
                          const StateVector& v);

OdeSystem make_diffusion_2d(const Diffusion2DParams& params);

// ---------------------------------------------------------------------------
// AnisotropicStencil template constructor.

template <typename TensorFn>
AnisotropicStencil::AnisotropicStencil(int n_side, TensorFn&& tensor)
    : n_(n_side),
      inv_dx2_(static_cast<double>(n_side) * n_side),
      face_x_(static_cast<std::size_t>(n_side) * (n_side + 1), 0.0),
      face_y_(static_cast<std::size_t>(n_side + 1) * n_side, 0.0),
      cross_(static_cast<std::size_t>(n_side) * n_side, 0.0) {
  const int n = n_side;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const std::array<double, 3> d = tensor(i, j);
      cross_[j * n + i] = d[2];
      // Cell (i, j) borders x-faces (i, j) and (i, j+1), y-faces (i, j), (i+1, j).
      face_x_[j * n + i] += 0.5 * d[0];
      face_x_[(j + 1) * n + i] += 0.5 * d[0];
      face_y_[j * (n + 1) + i] += 0.5 * d[1];
      face_y_[j * (n + 1) + i + 1] += 0.5 * d[1];
    }
  }
}

}  // namespace expint
