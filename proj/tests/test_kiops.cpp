#include "expint/densephi.hpp"
#include "expint/kiops.hpp"
#include "oracles.hpp"

#include <doctest.h>

using namespace expint;

namespace {

LinearOp matrix_op(const DenseMatrix& a) {
  return [a](const StateVector& v) -> StateVector { return a * v; };
}

double rel_err(const StateVector& x, const StateVector& ref) {
  return (x - ref).norm() / ref.norm();
}

}  // namespace

TEST_CASE("zero operator returns v0 + v1") {
  std::mt19937 rng(1);
  PhiCombinationTask task;
  task.op = [](const StateVector& v) -> StateVector { return StateVector::Zero(v.size()); };
  task.vs = {oracle::random_vector(6, rng), oracle::random_vector(6, rng)};
  const auto res = kiops_eval(task);
  REQUIRE(res.w.size() == 1);
  CHECK(rel_err(res.w[0], task.vs[0] + task.vs[1]) < 1e-14);
}

TEST_CASE("symmetric n=20, p=4 matches the dense oracle") {
  std::mt19937 rng(2);
  const DenseMatrix a = oracle::random_symmetric(20, -5.0, 0.0, rng);
  PhiCombinationTask task;
  task.op = matrix_op(a);
  for (int i = 0; i <= 4; ++i) task.vs.push_back(oracle::random_vector(20, rng));
  task.tol = 1e-10;
  const auto res = kiops_eval(task);
  CHECK(rel_err(res.w[0], phi_combination_dense(a, task.vs)) <= 1e-8);
  CHECK(rel_err(res.w[0], oracle::phi_combination_symmetric(a, task.vs)) <= 1e-8);
}

TEST_CASE("several taus from one projection") {
  std::mt19937 rng(3);
  const DenseMatrix a = oracle::random_symmetric(30, -40.0, 0.0, rng);
  const StateVector hf = oracle::random_vector(30, rng);
  PhiCombinationTask task;
  task.op = matrix_op(a);
  task.vs = {StateVector::Zero(30), hf};
  task.taus = {1.0 / 9.0, 1.0 / 8.0, 1.0};
  task.tol = 1e-10;
  const auto res = kiops_eval(task);
  REQUIRE(res.w.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    const double tau = task.taus[i];
    const StateVector ref = oracle::phi_combination_symmetric(a, task.vs, tau);
    CAPTURE(tau);
    CHECK(rel_err(res.w[i], ref) <= 100 * task.tol);
  }
}

TEST_CASE("multi-tau request reproduces the single-tau result") {
  std::mt19937 rng(4);
  const DenseMatrix a = oracle::random_symmetric(25, -30.0, 0.0, rng);
  PhiCombinationTask task;
  task.op = matrix_op(a);
  task.vs = {oracle::random_vector(25, rng), oracle::random_vector(25, rng),
             oracle::random_vector(25, rng)};
  task.tol = 1e-8;
  const StateVector single = kiops_eval(task).w[0];
  task.taus = {0.5, 1.0};
  const StateVector multi = kiops_eval(task).w[1];
  CHECK(rel_err(multi, single) <= 10 * task.tol);
}

TEST_CASE("linearity in the input vectors") {
  std::mt19937 rng(5);
  const DenseMatrix a = oracle::random_symmetric(20, -20.0, 0.0, rng);
  PhiCombinationTask task;
  task.op = matrix_op(a);
  task.vs = {oracle::random_vector(20, rng), oracle::random_vector(20, rng)};
  task.tol = 1e-8;
  const StateVector base = kiops_eval(task).w[0];
  for (double alpha : {-3.0, 0.25, 17.0}) {
    PhiCombinationTask scaled = task;
    for (auto& v : scaled.vs) v *= alpha;
    const StateVector w = kiops_eval(scaled).w[0];
    CHECK((w - alpha * base).norm() <= 1e-10 * std::abs(alpha) * base.norm());
  }
}

TEST_CASE("dot-product budget per Krylov vector") {
  std::mt19937 rng(6);
  const DenseMatrix a = oracle::random_symmetric(40, -50.0, 0.0, rng);
  PhiCombinationTask task;
  task.op = matrix_op(a);
  for (int i = 0; i <= 3; ++i) task.vs.push_back(oracle::random_vector(40, rng));
  task.tol = 1e-10;
  const auto st = kiops_eval(task).stats;
  CHECK(st.krylov_vectors > 0);
  CHECK(st.ortho_dots <= 2 * st.krylov_vectors);
  // one normalization per appended vector plus one per (re)started basis
  CHECK(st.normalizations <= st.krylov_vectors + st.substeps + st.rejected);
  CHECK(st.matvecs >= st.krylov_vectors);
}

TEST_CASE("task validation") {
  PhiCombinationTask task;
  task.op = [](const StateVector& v) -> StateVector { return v; };
  task.vs = {StateVector::Ones(3)};
  task.taus = {0.5};
  CHECK_THROWS_AS(kiops_eval(task), ConfigError);
  task.taus = {0.5, 0.25, 1.0};
  CHECK_THROWS_AS(kiops_eval(task), ConfigError);
  task.taus = {1.0};
  task.tol = 0.0;
  CHECK_THROWS_AS(kiops_eval(task), ConfigError);
  task.tol = 1e-8;
  task.m_init = 0;
  CHECK_THROWS_AS(kiops_eval(task), ConfigError);
  task.m_init = 10;
  task.vs = {StateVector::Ones(3), StateVector::Ones(4)};
  CHECK_THROWS_AS(kiops_eval(task), DimensionError);
  task.vs.assign(kMaxPhiOrder + 2, StateVector::Ones(3));
  CHECK_THROWS_AS(kiops_eval(task), UnsupportedOrderError);
}

TEST_CASE("iop_arnoldi_extend") {
  SUBCASE("identity operator breaks down after one step") {
    KrylovWorkspace ws(5, 10);
    ws.start(StateVector::Ones(5));
    iop_arnoldi_extend(ws, [](const StateVector& v) -> StateVector { return v; });
    CHECK(ws.hessenberg(0, 0) == doctest::Approx(1.0));
    CHECK(ws.happy_breakdown);
  }
  SUBCASE("two active eigencomponents break down at m = 2") {
    StateVector d(6);
    d << 1, 2, 3, 4, 5, 6;
    KrylovWorkspace ws(6, 10);
    StateVector start = StateVector::Zero(6);
    start[0] = start[1] = 1.0;
    ws.start(start);
    const LinearOp op = [d](const StateVector& v) -> StateVector { return d.cwiseProduct(v); };
    iop_arnoldi_extend(ws, op);
    CHECK_FALSE(ws.happy_breakdown);
    iop_arnoldi_extend(ws, op);
    CHECK(ws.happy_breakdown);
    CHECK(ws.m == 2);
  }
  SUBCASE("columns are unit vectors and H is the banded projection") {
    std::mt19937 rng(8);
    const DenseMatrix a = oracle::random_matrix(50, 10.0, rng);
    KrylovWorkspace ws(50, 12);
    ws.start(oracle::random_vector(50, rng));
    for (int k = 0; k < 10; ++k) iop_arnoldi_extend(ws, matrix_op(a));
    REQUIRE(ws.m == 10);
    for (int j = 0; j <= 10; ++j) CHECK(ws.basis.col(j).norm() == doctest::Approx(1.0).epsilon(1e-12));
    for (int j = 0; j < 10; ++j) {
      const StateVector av = a * ws.basis.col(j);
      for (int i = std::max(0, j - 1); i <= j; ++i) {
        CHECK(std::abs(ws.hessenberg(i, j) - ws.basis.col(i).dot(av)) < 1e-10);
      }
      for (int i = 0; i < j - 1; ++i) CHECK(ws.hessenberg(i, j) == 0.0);
      CHECK(ws.hessenberg(j + 1, j) >= 0.0);
    }
    CHECK(ws.ortho_dots == 2 * 10 - 1);
  }
}

TEST_CASE("substep_controller") {
  SubstepControllerState st;
  SUBCASE("zero error accepts and grows by the cap") {
    const auto d = substep_controller(0.0, 1e-8, 0.01, 10, 1.0, st);
    CHECK(d.accept);
    CHECK(d.tau_next == doctest::Approx(0.05));
  }
  SUBCASE("boundary is inclusive") {
    const auto d = substep_controller(1e-8 * 0.1, 1e-8, 0.1, 10, 1.0, st);
    CHECK(d.accept);
  }
  SUBCASE("large error rejects and shrinks") {
    const auto d = substep_controller(100 * 1e-8 * 0.1, 1e-8, 0.1, 10, 1.0, st);
    CHECK_FALSE(d.accept);
    CHECK(d.tau_next < 0.1);
    CHECK(d.m_next > 10);
  }
  SUBCASE("next substep never overshoots the horizon") {
    const auto d = substep_controller(0.0, 1e-8, 0.1, 10, 0.15, st);
    CHECK(d.tau_next <= 0.15 + 1e-15);
  }
  SUBCASE("two first-try accepts shrink m") {
    st.m_min = 10;
    substep_controller(0.0, 1e-8, 0.1, 40, 1.0, st);
    const auto d = substep_controller(0.0, 1e-8, 0.1, 40, 1.0, st);
    CHECK(d.m_next == 36);
  }
}

TEST_CASE("krylov_error_estimate") {
  std::mt19937 rng(9);
  SUBCASE("zero after a happy breakdown and in the full space") {
    KrylovWorkspace ws(4, 10);
    ws.start(StateVector::Ones(4));
    iop_arnoldi_extend(ws, [](const StateVector& v) -> StateVector { return 2.0 * v; });
    CHECK(krylov_error_estimate(ws, 1.0, augmented_small_exp(ws, 1.0)) == 0.0);

    const DenseMatrix a = oracle::random_symmetric(6, -3.0, 0.0, rng);
    KrylovWorkspace full(6, 10, 6);
    full.start(oracle::random_vector(6, rng));
    for (int k = 0; k < 6 && !full.happy_breakdown; ++k) iop_arnoldi_extend(full, matrix_op(a));
    CHECK(krylov_error_estimate(full, 1.0, augmented_small_exp(full, 1.0)) < 1e-12);
  }
  SUBCASE("within a factor 100 of the true error") {
    int within = 0;
    for (int trial = 0; trial < 50; ++trial) {
      const DenseMatrix a = oracle::random_symmetric(20, -10.0, 0.0, rng);
      const StateVector v = oracle::random_vector(20, rng);
      const int m = 4 + trial % 5;
      KrylovWorkspace ws(20, m + 1, 20);
      ws.start(v);
      for (int k = 0; k < m; ++k) iop_arnoldi_extend(ws, matrix_op(a));
      const DenseMatrix se = augmented_small_exp(ws, 1.0);
      const StateVector approx =
          ws.beta * ws.basis.leftCols(ws.m) * se.col(ws.m).head(ws.m);
      const StateVector exact =
          oracle::symmetric_function(a, [](double x) { return oracle::phi_scalar(1, x); }) * v;
      const double truth = (approx - exact).norm();
      const double est = krylov_error_estimate(ws, 1.0, se);
      if (truth <= 100 * est && est <= 100 * truth) ++within;
    }
    CHECK(within == 50);
  }
}

TEST_CASE("random oracle equivalence sweep") {
  std::mt19937 rng(10);
  std::uniform_int_distribution<int> ndist(2, 40), pdist(0, 4);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = ndist(rng), p = pdist(rng);
    const double tol = trial % 2 ? 1e-6 : 1e-10;
    const DenseMatrix a = oracle::random_symmetric(n, -50.0, 0.0, rng);
    PhiCombinationTask task;
    task.op = matrix_op(a);
    for (int i = 0; i <= p; ++i) task.vs.push_back(oracle::random_vector(n, rng));
    task.tol = tol;
    const StateVector ref = phi_combination_dense(a, task.vs);
    CAPTURE(n);
    CAPTURE(p);
    CHECK(rel_err(kiops_eval(task).w[0], ref) <= 100 * tol);
  }
}
