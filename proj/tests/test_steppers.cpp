#include "expint/densephi.hpp"
#include "expint/error.hpp"
#include "expint/linsolve.hpp"
#include "expint/problems.hpp"
#include "expint/steppers.hpp"
#include "expint/tableau.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace expint;

namespace {

OdeSystem linear_system(const DenseMatrix& a) {
  OdeSystem s;
  s.dim = a.rows();
  s.rhs = [a](double, const StateVector& y) -> StateVector { return a * y; };
  s.jac_action = [a](const StateVector&, const StateVector& v, const StateVector&) -> StateVector {
    return a * v;
  };
  s.autonomous = true;
  return s;
}

OdeSystem scalar_linear(double lambda) {
  return linear_system(DenseMatrix::Constant(1, 1, lambda));
}

OdeSystem zero_system(int n) {
  OdeSystem s;
  s.dim = n;
  s.rhs = [n](double, const StateVector&) -> StateVector { return StateVector::Zero(n); };
  s.autonomous = true;
  return s;
}

StepperConfig config(Method m, double h) {
  StepperConfig c;
  c.method = m;
  c.h = h;
  return c;
}

StateVector scalar(double x) { return StateVector::Constant(1, x); }

double slope(const std::vector<double>& hs, const std::vector<double>& errs) {
  const double n = static_cast<double>(hs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < hs.size(); ++i) {
    mx += std::log(hs[i]);
    my += std::log(errs[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < hs.size(); ++i) {
    sxy += (std::log(hs[i]) - mx) * (std::log(errs[i]) - my);
    sxx += (std::log(hs[i]) - mx) * (std::log(hs[i]) - mx);
  }
  return sxy / sxx;
}

}  // namespace

TEST_CASE("tableaus are consistent") {
  for (Method m : all_methods()) {
    if (method_family(m) == MethodFamily::Exponential) {
      CHECK_THROWS_AS(tableau_for(m), ConfigError);
      continue;
    }
    const ButcherTableau t = tableau_for(m);
    CAPTURE(t.name);
    CHECK_NOTHROW(t.validate());
    CHECK(t.b.sum() == doctest::Approx(1.0).epsilon(1e-15));
    for (int i = 0; i < t.stages(); ++i) {
      CHECK(t.c[i] == doctest::Approx(t.a.row(i).sum()).epsilon(1e-15));
    }
    CHECK(t.order == nominal_order(m));
    if (method_family(m) == MethodFamily::Explicit) CHECK(t.is_explicit());
    else CHECK(t.is_diagonally_implicit());
  }
  CHECK(tableau_for(Method::BE).gamma() == 1.0);
  CHECK(tableau_for(Method::SDIRK2).gamma() == doctest::Approx(1.0 - 1.0 / std::sqrt(2.0)));
  CHECK(tableau_for(Method::SDIRK3).gamma() == doctest::Approx((3.0 + std::sqrt(3.0)) / 6.0));
}

TEST_CASE("method names round-trip") {
  for (Method m : all_methods()) CHECK(parse_method(method_name(m)) == m);
  CHECK(parse_method("epirk4") == Method::EPIRK4);
  CHECK_THROWS_AS(parse_method("RK5"), ConfigError);
}

TEST_CASE("StepperConfig validation") {
  StepperConfig c;
  CHECK_NOTHROW(c.validate());
  c.h = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.h = 0.1;
  c.krylov_tol = -1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("zero right-hand side leaves the state unchanged") {
  const OdeSystem s = zero_system(3);
  const StateVector y = StateVector::LinSpaced(3, 1.0, 3.0);
  for (Method m : all_methods()) {
    CAPTURE(method_name(m));
    const StepResult r = step(s, 0.0, y, config(m, 0.3));
    CHECK(r.y == y);
    if (method_family(m) == MethodFamily::Implicit) CHECK(r.report.newton_iters == 0);
  }
}

TEST_CASE("scalar examples") {
  CHECK(epi2_step(scalar_linear(-1.0), 0.0, scalar(1.0), config(Method::EPI2, 0.5)).y[0] ==
        doctest::Approx(std::exp(-0.5)).epsilon(1e-10));
  CHECK(epirk4_step(scalar_linear(-1.0), 0.0, scalar(1.0), config(Method::EPIRK4, 0.5)).y[0] ==
        doctest::Approx(std::exp(-0.5)).epsilon(1e-10));

  const double rk4 =
      explicit_rk_step(scalar_linear(-1.0), 0.0, scalar(1.0), tableau_for(Method::RK4), 0.1)[0];
  CHECK(std::abs(rk4 - 0.9048375) < 1e-7);
  CHECK(std::abs(rk4 - std::exp(-0.1)) < 1e-7);

  const double fe =
      explicit_rk_step(scalar_linear(-30.0), 0.0, scalar(1.0), tableau_for(Method::FE), 0.1)[0];
  CHECK(std::abs(fe) == doctest::Approx(2.0));

  CHECK(sdirk_step(scalar_linear(-1.0), 0.0, scalar(1.0), tableau_for(Method::BE),
                   config(Method::BE, 1.0)).y[0] == doctest::Approx(0.5).epsilon(1e-9));

  const double stiff = sdirk_step(scalar_linear(-1e6), 0.0, scalar(1.0),
                                  tableau_for(Method::SDIRK2), config(Method::SDIRK2, 1.0)).y[0];
  CHECK(std::abs(stiff) < 1.0);
}

TEST_CASE("explicit stepper reports non-finite stages") {
  OdeSystem s = zero_system(1);
  s.rhs = [](double, const StateVector& y) -> StateVector { return y.array().square() * 1e300; };
  CHECK_THROWS_AS(explicit_rk_step(s, 0.0, scalar(1e10), tableau_for(Method::RK4), 1.0),
                  NumericError);
}

TEST_CASE("implicit methods do not amplify stiff decay") {
  for (Method m : {Method::BE, Method::SDIRK2}) {
    for (double z : {-10.0, -1e3, -1e6}) {
      const OdeSystem s = scalar_linear(z);
      StateVector y = scalar(1.0);
      double prev = 1.0;
      const StepperConfig c = config(m, 1.0);
      for (int n = 0; n < 5; ++n) {
        y = step(s, n * 1.0, y, c).y;
        // Newton stops on an absolute residual, so allow its tolerance
        CHECK(std::abs(y[0]) <= prev + c.newton_tol);
        prev = std::abs(y[0]);
      }
    }
  }
}

TEST_CASE("exponential methods are exact on linear problems for any h") {
  std::mt19937 rng(12);
  const DenseMatrix a = oracle::random_symmetric(20, -10.0, -0.1, rng);
  const OdeSystem s = linear_system(a);
  const StateVector y0 = oracle::random_vector(20, rng);
  for (Method m : {Method::EPI2, Method::EPIRK4}) {
    for (double h : {1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0, 1000.0}) {
      StepperConfig c = config(m, h);
      c.krylov_tol = 1e-10;
      const StateVector exact =
          oracle::symmetric_function(a, [h](double x) { return std::exp(h * x); }) * y0;
      const StateVector y1 = step(s, 0.0, y0, c).y;
      CAPTURE(h);
      CHECK((y1 - exact).norm() <= 10 * c.krylov_tol * y0.norm());
    }
  }
}

TEST_CASE("Krylov projection budget per step") {
  const Diffusion1DParams p{};
  const OdeSystem s = make_diffusion_1d(p);
  for (Method m : {Method::EPI2, Method::EPIRK4}) {
    StepperConfig c = config(m, 0.01);
    const long expected = m == Method::EPI2 ? 1 : 2;
    const auto res = integrate(s, c, 0.0, 0.1, initial_state_1d(p),
                               [&](double, const StateVector&, const StepReport& r) {
                                 CHECK(r.krylov_projections == expected);
                                 CHECK(r.ortho_dots <= 2 * r.krylov_vectors);
                               });
    CHECK(res.report.steps == 10);
    CHECK(res.report.krylov_projections == 10 * expected);
  }
}

TEST_CASE("EPIRK4 uses at least as many matvecs per step as EPI2") {
  Diffusion1DParams p;
  p.initial_scale = 0.5;
  const OdeSystem s = make_diffusion_1d(p);
  const StateVector y0 = initial_state_1d(p);
  const auto r2 = step(s, 0.0, y0, config(Method::EPI2, 0.05)).report;
  const auto r4 = step(s, 0.0, y0, config(Method::EPIRK4, 0.05)).report;
  CHECK(r4.matvecs >= r2.matvecs);
}

TEST_CASE("convergence orders on y' = y cos t") {
  OdeSystem s;
  s.dim = 1;
  s.rhs = [](double t, const StateVector& y) -> StateVector { return y * std::cos(t); };
  const double tf = 1.0;
  const double exact = std::exp(std::sin(tf));
  struct Expect {
    Method m;
    double order, tol;
  };
  const Expect expect[] = {{Method::FE, 1, 0.15},     {Method::BE, 1, 0.15},
                           {Method::RK2, 2, 0.2},     {Method::SDIRK2, 2, 0.2},
                           {Method::EPI2, 2, 0.2},    {Method::RK3SSP, 3, 0.3},
                           {Method::SDIRK3, 3, 0.3},  {Method::RK4, 4, 0.4},
                           {Method::EPIRK4, 4, 0.4}};
  for (const auto& e : expect) {
    std::vector<double> hs, errs;
    for (int k = 3; k <= 8; ++k) {
      const double h = 0.5 * std::ldexp(1.0, -k);
      StepperConfig c = config(e.m, h);
      c.krylov_tol = 1e-14;
      c.newton_tol = 1e-14;
      c.gmres_tol = 1e-14;
      const auto res = integrate(s, c, 0.0, tf, scalar(1.0));
      REQUIRE_FALSE(res.diverged);
      hs.push_back(h);
      errs.push_back(std::abs(res.y[0] - exact));
    }
    CAPTURE(method_name(e.m));
    CHECK(std::abs(slope(hs, errs) - e.order) <= e.tol);
  }
}

TEST_CASE("gmres") {
  SUBCASE("identity") {
    const StateVector b = StateVector::LinSpaced(4, 1.0, 4.0);
    const auto r = gmres([](const StateVector& v) -> StateVector { return v; }, b, 1e-12);
    CHECK(r.iterations == 1);
    CHECK((r.x - b).norm() < 1e-14);
  }
  SUBCASE("diagonal") {
    const StateVector d = StateVector::LinSpaced(5, 1.0, 5.0);
    const auto r = gmres([d](const StateVector& v) -> StateVector { return d.cwiseProduct(v); },
                         StateVector::Ones(5), 1e-12);
    for (int i = 0; i < 5; ++i) CHECK(r.x[i] == doctest::Approx(1.0 / (i + 1)).epsilon(1e-10));
  }
  SUBCASE("random SPD vs dense Cholesky") {
    std::mt19937 rng(13);
    const DenseMatrix a = oracle::random_symmetric(30, 1.0, 50.0, rng);
    const StateVector b = oracle::random_vector(30, rng);
    const auto r = gmres([a](const StateVector& v) -> StateVector { return a * v; }, b, 1e-10);
    const StateVector ref = a.llt().solve(b);
    CHECK((a * r.x - b).norm() <= 1e-10 * b.norm() * 1.0001);
    CHECK((r.x - ref).norm() <= 1e-8 * ref.norm());
  }
  SUBCASE("zero right-hand side") {
    const auto r = gmres([](const StateVector& v) -> StateVector { return v; },
                         StateVector::Zero(3), 1e-10);
    CHECK(r.iterations == 0);
    CHECK(r.x.norm() == 0.0);
  }
  SUBCASE("iteration cap raises stagnation with the residual") {
    std::mt19937 rng(14);
    const DenseMatrix a = oracle::random_symmetric(40, 1.0, 1e4, rng);
    try {
      gmres([a](const StateVector& v) -> StateVector { return a * v; },
            oracle::random_vector(40, rng), 1e-14, 3);
      FAIL("expected stagnation");
    } catch (const GmresStagnationError& e) {
      CHECK(e.iterations() == 3);
      CHECK(e.achieved_residual() > 1e-14);
    }
  }
}

TEST_CASE("newton_krylov_solve") {
  NewtonOptions opt;
  SUBCASE("affine residual converges in one iteration") {
    const StateVector c = StateVector::LinSpaced(3, -1.0, 2.0);
    const ResidualJacobian exact = [](const StateVector&, const StateVector& v,
                                      const StateVector&) -> StateVector { return v; };
    const auto r = newton_krylov_solve([c](const StateVector& y) -> StateVector { return y - c; },
                                       StateVector::Zero(3), opt, exact);
    CHECK(r.iterations == 1);
    CHECK((r.x - c).norm() < 1e-10);
  }
  SUBCASE("scalar quadratic") {
    const auto r = newton_krylov_solve(
        [](const StateVector& y) -> StateVector { return y.array().square() - 4.0; }, scalar(3.0),
        opt);
    CHECK(r.x[0] == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(r.residual_history.back() <= opt.newton_tol * (1.0 + r.residual_history.front()));
  }
  SUBCASE("singular Jacobian at the start fails cleanly") {
    const Residual g = [](const StateVector& y) -> StateVector { return y.array().square() + 1.0; };
    const ResidualJacobian jac = [](const StateVector& y, const StateVector& v,
                                    const StateVector&) -> StateVector {
      return 2.0 * y.cwiseProduct(v);
    };
    CHECK_THROWS_AS(newton_krylov_solve(g, scalar(0.0), opt, jac), ConvergenceError);
  }
  SUBCASE("non-convergence carries the residual trace") {
    NewtonOptions tight = opt;
    tight.newton_max_iter = 2;
    try {
      newton_krylov_solve(
          [](const StateVector& y) -> StateVector { return y.array().square() - 4.0; },
          scalar(1000.0), tight);
      FAIL("expected non-convergence");
    } catch (const NewtonConvergenceError& e) {
      CHECK(e.residual_history().size() >= 2);
    }
  }
}

TEST_CASE("integrate") {
  SUBCASE("empty interval returns the initial state") {
    const StateVector y0 = scalar(3.0);
    const auto r = integrate(scalar_linear(-1.0), config(Method::RK4, 0.1), 0.0, 0.0, y0);
    CHECK(r.y == y0);
    CHECK(r.report.steps == 0);
  }
  SUBCASE("EPI2 on y' = -y is exact") {
    StepperConfig c = config(Method::EPI2, 0.5);
    c.krylov_tol = 1e-12;
    const auto r = integrate(scalar_linear(-1.0), c, 0.0, 1.0, scalar(1.0));
    CHECK(r.report.steps == 2);
    CHECK(std::abs(r.y[0] - std::exp(-1.0)) <= 10 * c.krylov_tol);
    CHECK_FALSE(r.last_step_shortened);
  }
  SUBCASE("non-tiling step shortens the last step") {
    const auto r = integrate(scalar_linear(-1.0), config(Method::RK4, 0.3), 0.0, 1.0, scalar(1.0));
    CHECK(r.last_step_shortened);
    CHECK(r.report.steps == 4);
    CHECK(r.t == doctest::Approx(1.0));
    CHECK(r.y[0] == doctest::Approx(std::exp(-1.0)).epsilon(1e-4));
  }
  SUBCASE("steps that tile up to rounding are not flagged") {
    const auto r = integrate(scalar_linear(-1.0), config(Method::FE, 0.1), 0.0, 0.3, scalar(1.0));
    CHECK_FALSE(r.last_step_shortened);
    CHECK(r.report.steps == 3);
  }
  SUBCASE("observer sees every step") {
    int calls = 0;
    integrate(scalar_linear(-1.0), config(Method::RK2, 0.125), 0.0, 1.0, scalar(1.0),
              [&](double, const StateVector&, const StepReport& r) {
                ++calls;
                CHECK(r.steps == 1);
              });
    CHECK(calls == 8);
  }
  SUBCASE("explicit blow-up is recorded, not thrown") {
    Diffusion1DParams p;
    p.n_elem = 200;
    const auto r = integrate(make_diffusion_1d(p), config(Method::RK4, 1.5 / 32), 0.0, 1.5,
                             initial_state_1d(p));
    CHECK(r.diverged);
    CHECK(r.t < 1.5);
  }
}
