#include "expint/problems.hpp"

#include "expint/error.hpp"

#include <cmath>
#include <memory>
#include <string>

namespace expint {

double source_gaussian(double x, double sigma) {
  const double z = (x - 0.5) / sigma;
  return std::exp(-0.5 * z * z);
}

double g_flux(double u, double beta1, double beta2) {
  const double a = std::abs(u);
  return beta1 * u + (2.0 / 7.0) * beta2 * std::copysign(a * a * a * std::sqrt(a), u);
}

double g_flux_derivative(double u, double beta1, double beta2) {
  const double a = std::abs(u);
  return beta1 + beta2 * a * a * std::sqrt(a);
}

// ---------------------------------------------------------------------------
// 1D

void Diffusion1DParams::validate() const {
  if (beta1 < 0.0 || beta2 < 0.0 || !(beta1 + beta2 > 0.0)) {
    throw ConfigError("diff1d: need beta1, beta2 >= 0 and beta1 + beta2 > 0");
  }
  if (n_elem < 4) throw ConfigError("diff1d: n_elem must be >= 4");
  if (!(sigma > 0.0)) throw ConfigError("diff1d: sigma must be positive");
}

namespace {

void check_length(const StateVector& v, Eigen::Index n, const char* what) {
  if (v.size() != n) {
    throw DimensionError(std::string(what) + ": expected length " +
                         std::to_string(n) + ", got " + std::to_string(v.size()));
  }
}

// out_i = (w_{i+1} - 2 w_i + w_{i-1}) / dx^2 with zero boundary values.
void second_difference(const StateVector& w, double inv_dx2, StateVector& out) {
  const auto n = w.size();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double left = i > 0 ? w(i - 1) : 0.0;
    const double right = i + 1 < n ? w(i + 1) : 0.0;
    out(i) = (right - 2.0 * w(i) + left) * inv_dx2;
  }
}

}  // namespace

StateVector rhs_1d(const Diffusion1DParams& p, double, const StateVector& y) {
  check_length(y, p.dim(), "rhs_1d");
  const auto n = y.size();
  StateVector g(n);
  for (Eigen::Index i = 0; i < n; ++i) g(i) = g_flux(y(i), p.beta1, p.beta2);
  StateVector out(n);
  second_difference(g, 1.0 / (p.dx() * p.dx()), out);
  for (Eigen::Index i = 0; i < n; ++i) {
    out(i) += source_gaussian(static_cast<double>(i + 1) * p.dx(), p.sigma);
  }
  return out;
}

StateVector jac_action_1d(const Diffusion1DParams& p, const StateVector& y,
                          const StateVector& v) {
  check_length(y, p.dim(), "jac_action_1d");
  check_length(v, p.dim(), "jac_action_1d");
  const auto n = y.size();
  StateVector w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    w(i) = g_flux_derivative(y(i), p.beta1, p.beta2) * v(i);
  }
  StateVector out(n);
  second_difference(w, 1.0 / (p.dx() * p.dx()), out);
  return out;
}

StateVector initial_state_1d(const Diffusion1DParams& p) {
  StateVector y(p.dim());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    y(i) = p.initial_scale *
           source_gaussian(static_cast<double>(i + 1) * p.dx(), p.sigma);
  }
  return y;
}

OdeSystem make_diffusion_1d(const Diffusion1DParams& params) {
  params.validate();
  OdeSystem sys;
  sys.dim = params.dim();
  sys.name = "diff1d";
  sys.autonomous = true;
  sys.rhs = [params](double t, const StateVector& y) { return rhs_1d(params, t, y); };
  sys.jac_action = [params](const StateVector& y, const StateVector& v,
                            const StateVector&) {
    return jac_action_1d(params, y, v);
  };
  return sys;
}

// ---------------------------------------------------------------------------
// Field

Vec2 TwoWireField::operator()(const Vec2& p) const {
  double bx = 0.0;
  double by = 0.0;
  double scale = 0.0;
  for (int w = 0; w < 2; ++w) {
    const double dx = p[0] - positions[w][0];
    const double dy = p[1] - positions[w][1];
    const double r2 = dx * dx + dy * dy;
    if (std::sqrt(r2) < 1e-9) {
      throw SingularPointError("two_wire_field: point within 1e-9 of wire " +
                               std::to_string(w));
    }
    bx += strengths[w] * (-dy) / r2;
    by += strengths[w] * dx / r2;
    scale += std::abs(strengths[w]) / std::sqrt(r2);
  }
  const double norm = std::hypot(bx, by);
  if (norm <= 1e-12 * scale) {
    throw SingularPointError("two_wire_field: field vanishes at (" +
                             std::to_string(p[0]) + ", " + std::to_string(p[1]) +
                             ")");
  }
  return {bx / norm, by / norm};
}

Vec2 two_wire_field(const Vec2& p, const TwoWireField& field) { return field(p); }

// ---------------------------------------------------------------------------
// 2D

void Diffusion2DParams::validate() const {
  if (!(kappa > 0.0)) throw ConfigError("diff2d: kappa must be positive");
  if (!(eps_perp > 0.0)) throw ConfigError("diff2d: eps_perp must be positive");
  if (beta1 < 0.0 || beta2 < 0.0) throw ConfigError("diff2d: betas must be >= 0");
  if (!(sigma > 0.0)) throw ConfigError("diff2d: sigma must be positive");
  if (n_side < 8) throw ConfigError("diff2d: n_side must be >= 8");
  for (const auto& w : field.positions) {
    if (!(w[0] > 0.0 && w[0] < 1.0 && w[1] > 0.0 && w[1] < 1.0)) {
      throw ConfigError("diff2d: wire positions must lie inside (0, 1)^2");
    }
  }
  if (uniform_field) {
    const double norm = std::hypot((*uniform_field)[0], (*uniform_field)[1]);
    if (std::abs(norm - 1.0) > 1e-12) {
      throw ConfigError("diff2d: uniform field must be a unit vector");
    }
  }
}

void AnisotropicStencil::apply_add(const StateVector& phi, double scale,
                                   StateVector& out) const {
  const int n = n_;
  const int m = n - 1;
  const int stride = n + 1;
  std::vector<double> grid(static_cast<std::size_t>(stride) * stride, 0.0);
  auto at = [&](int i, int j) -> double& { return grid[j * stride + i]; };
  for (int j = 1; j < n; ++j)
    for (int i = 1; i < n; ++i) at(i, j) = phi((j - 1) * m + (i - 1));

  const double s = scale * inv_dx2_;
  for (int j = 1; j < n; ++j) {
    for (int i = 1; i < n; ++i) {
      const double c = at(i, j);
      const double east = face_x_[j * n + i] * (at(i + 1, j) - c);
      const double west = face_x_[j * n + i - 1] * (c - at(i - 1, j));
      const double north = face_y_[j * stride + i] * (at(i, j + 1) - c);
      const double south = face_y_[(j - 1) * stride + i] * (c - at(i, j - 1));
      out((j - 1) * m + (i - 1)) += s * (east - west + north - south);
    }
  }

  // Off-diagonal tensor part through cell-center gradients.
  const double sc = -0.25 * s;
  auto add = [&](int i, int j, double value) {
    if (i >= 1 && i < n && j >= 1 && j < n) out((j - 1) * m + (i - 1)) += value;
  };
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const double dxy = cross_[j * n + i];
      if (dxy == 0.0) continue;
      const double p00 = at(i, j), p10 = at(i + 1, j);
      const double p01 = at(i, j + 1), p11 = at(i + 1, j + 1);
      const double gx = p10 + p11 - p00 - p01;
      const double gy = p01 + p11 - p00 - p10;
      const double k = sc * dxy;
      add(i, j, k * (-gy - gx));
      add(i + 1, j, k * (gy - gx));
      add(i, j + 1, k * (-gy + gx));
      add(i + 1, j + 1, k * (gy + gx));
    }
  }
}

Diffusion2D::Diffusion2D(Diffusion2DParams params) : params_(std::move(params)) {
  params_.validate();
  const int n = params_.n_side;
  const double dx = params_.dx();
  std::vector<Vec2> directions(static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      directions[j * n + i] = field_at({(i + 0.5) * dx, (j + 0.5) * dx});
    }
  }
  parallel_.emplace(n, [&](int i, int j) {
    const Vec2 b = directions[j * n + i];
    return std::array<double, 3>{b[0] * b[0], b[1] * b[1], b[0] * b[1]};
  });
  const double eps = params_.eps_perp;
  perpendicular_.emplace(n, [&](int i, int j) {
    const Vec2 b = directions[j * n + i];
    return std::array<double, 3>{eps * (1.0 - b[0] * b[0]),
                                 eps * (1.0 - b[1] * b[1]), -eps * b[0] * b[1]};
  });

  source_.resize(params_.dim());
  for (int j = 1; j < n; ++j)
    for (int i = 1; i < n; ++i)
      source_((j - 1) * (n - 1) + (i - 1)) = source_gaussian(i * dx, params_.sigma);
}

Vec2 Diffusion2D::field_at(const Vec2& p) const {
  if (params_.uniform_field) return *params_.uniform_field;
  return params_.field(p);
}

StateVector Diffusion2D::rhs(double, const StateVector& y) const {
  check_length(y, params_.dim(), "rhs_2d");
  const auto n = y.size();
  StateVector g(n);
  for (Eigen::Index k = 0; k < n; ++k) g(k) = g_flux(y(k), params_.beta1, params_.beta2);
  StateVector out = source_;
  parallel_->apply_add(g, params_.kappa, out);
  perpendicular_->apply_add(y, params_.kappa, out);
  return out;
}

StateVector Diffusion2D::jac_action(const StateVector& y, const StateVector& v) const {
  check_length(y, params_.dim(), "jac_action_2d");
  check_length(v, params_.dim(), "jac_action_2d");
  const auto n = y.size();
  StateVector w(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    w(k) = g_flux_derivative(y(k), params_.beta1, params_.beta2) * v(k);
  }
  StateVector out = StateVector::Zero(n);
  parallel_->apply_add(w, params_.kappa, out);
  perpendicular_->apply_add(v, params_.kappa, out);
  return out;
}

StateVector Diffusion2D::initial_state() const {
  return params_.initial_scale * source_;
}

OdeSystem Diffusion2D::system() const {
  auto self = std::make_shared<const Diffusion2D>(*this);
  OdeSystem sys;
  sys.dim = params_.dim();
  sys.name = "diff2d";
  sys.autonomous = true;
  sys.rhs = [self](double t, const StateVector& y) { return self->rhs(t, y); };
  sys.jac_action = [self](const StateVector& y, const StateVector& v,
                          const StateVector&) { return self->jac_action(y, v); };
  return sys;
}

StateVector rhs_2d(const Diffusion2DParams& params, double t, const StateVector& y) {
  return Diffusion2D(params).rhs(t, y);
}

StateVector jac_action_2d(const Diffusion2DParams& params, const StateVector& y,
                          const StateVector& v) {
  return Diffusion2D(params).jac_action(y, v);
}

OdeSystem make_diffusion_2d(const Diffusion2DParams& params) {
  return Diffusion2D(params).system();
}

}  // namespace expint
