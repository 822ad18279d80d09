#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "fastsls/model.hpp"
#include "fastsls/response.hpp"
#include "fastsls/simulate.hpp"
#include "test_helpers.hpp"

using namespace fastsls;

TEST_CASE("benchmark chain with one mass matches the hand discretization") {
  // continuous A_c = [[0, 1], [-10, -2]] with m=1, k=10, d=2; forward Euler
  // at dt = 0.1 gives A = I + dt A_c, B = dt B_c.
  const RobustOcp ocp = mass_spring_damper_chain(1, 5);
  CHECK(ocp.system.nx == 2);
  CHECK(ocp.system.nu == 1);

  Eigen::MatrixXd a_expected(2, 2);
  a_expected << 1.0, 0.1, -1.0, 0.8;
  Eigen::MatrixXd b_expected(2, 1);
  b_expected << 0.0, 0.1;
  CHECK((ocp.system.A[0] - a_expected).cwiseAbs().maxCoeff() == doctest::Approx(0).epsilon(1e-15));
  CHECK((ocp.system.B[0] - b_expected).cwiseAbs().maxCoeff() == doctest::Approx(0).epsilon(1e-15));
}

TEST_CASE("benchmark chain dimensions and weights") {
  const RobustOcp ocp = mass_spring_damper_chain(10, 3);
  CHECK(ocp.system.nx == 20);
  CHECK(ocp.system.nu == 10);
  CHECK(ocp.system.nw == 20);
  CHECK((ocp.system.E[0] - 0.1 * Eigen::MatrixXd::Identity(20, 20)).norm() == 0.0);
  CHECK((ocp.weights.Q - 3.0 * Eigen::MatrixXd::Identity(20, 20)).norm() == 0.0);
  CHECK((ocp.weights.P - ocp.weights.Q).norm() == 0.0);
  CHECK((ocp.weights.R - Eigen::MatrixXd::Identity(10, 10)).norm() == 0.0);
  CHECK(ocp.constraints.stage_rows() == 2 * (20 + 10));
  CHECK(ocp.constraints.terminal_rows() == 2 * 20);
  CHECK(ocp.constraints.b[0].isApproxToConstant(-4.0));
  CHECK(ocp.constraints.bf.isApproxToConstant(-4.0));
}

TEST_CASE("benchmark output always validates") {
  for (int masses : {1, 2, 3, 7}) {
    CHECK_NOTHROW(validate(mass_spring_damper_chain(masses, 4)));
  }
}

TEST_CASE("generated dynamics are dt-continuous") {
  // ||A - I|| = dt ||A_c||, so the ratio to dt is constant
  double reference_ratio = 0.0;
  for (double dt : {1e-1, 1e-2, 1e-3, 1e-4}) {
    const RobustOcp ocp = mass_spring_damper_chain(2, 2, dt);
    const double gap =
        (ocp.system.A[0] - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff();
    if (reference_ratio == 0.0) {
      reference_ratio = gap / dt;
    } else {
      CHECK(gap / dt == doctest::Approx(reference_ratio).epsilon(1e-12));
    }
  }
}

TEST_CASE("benchmark rejects bad parameters") {
  CHECK_THROWS_AS(mass_spring_damper_chain(0, 5), std::invalid_argument);
  CHECK_THROWS_AS(mass_spring_damper_chain(1, 0), std::invalid_argument);
  CHECK_THROWS_AS(mass_spring_damper_chain(1, 5, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(mass_spring_damper_chain(1, 5, 0.1, 0.0), std::invalid_argument);
}

TEST_CASE("validate flags the first broken invariant") {
  RobustOcp ocp = mass_spring_damper_chain(1, 3);
  CHECK_NOTHROW(validate(ocp));

  SUBCASE("negative definite Q") {
    ocp.weights.Q = -Eigen::MatrixXd::Identity(2, 2);
    try {
      validate(ocp);
      FAIL("expected ValidationError");
    } catch (const ValidationError& err) {
      CHECK(err.issue() == ValidationIssue::NotPositiveDefinite);
      CHECK(err.location() == "Q");
    }
  }
  SUBCASE("rank deficient E") {
    ocp.system.E[0].setZero();
    try {
      validate(ocp);
      FAIL("expected ValidationError");
    } catch (const ValidationError& err) {
      CHECK(err.issue() == ValidationIssue::RankDeficientE);
      CHECK(err.location() == "0");
    }
  }
  SUBCASE("dimension mismatch") {
    ocp.system.B[1] = Eigen::MatrixXd::Zero(3, 1);
    try {
      validate(ocp);
      FAIL("expected ValidationError");
    } catch (const ValidationError& err) {
      CHECK(err.issue() == ValidationIssue::DimensionMismatch);
    }
  }
}

TEST_CASE("zero disturbance reproduces the nominal rollout") {
  const RobustOcp ocp = mass_spring_damper_chain(2, 6);
  const int N = 6;
  std::vector<Eigen::VectorXd> v(N, Eigen::VectorXd::Constant(2, 0.3));
  std::vector<Eigen::VectorXd> w(N, Eigen::VectorXd::Zero(4));
  Eigen::VectorXd x0(4);
  x0 << 0.5, -0.2, 0.1, 0.0;

  const Trajectory traj = simulate_closed_loop(ocp.system, x0, v, GainSchedule{}, w);

  Eigen::VectorXd z = x0;
  for (int k = 0; k < N; ++k) {
    CHECK((traj.u[k] - v[k]).lpNorm<Eigen::Infinity>() == 0.0);
    z = ocp.system.A[k] * z + ocp.system.B[k] * v[k];
    CHECK((traj.x[k + 1] - z).lpNorm<Eigen::Infinity>() < 1e-14);
  }
}

TEST_CASE("scalar one-step rollout by hand") {
  // A = B = E = 1, v0 = 0, no feedback, w0 = 1, x0 = 0: x1 = 1.
  LtvSystem sys;
  sys.horizon = 1;
  sys.nx = sys.nu = sys.nw = 1;
  sys.A.assign(1, Eigen::MatrixXd::Ones(1, 1));
  sys.B.assign(1, Eigen::MatrixXd::Ones(1, 1));
  sys.E.assign(1, Eigen::MatrixXd::Ones(1, 1));

  const Trajectory traj = simulate_closed_loop(
      sys, Eigen::VectorXd::Zero(1), {Eigen::VectorXd::Zero(1)}, GainSchedule{},
      {Eigen::VectorXd::Ones(1)});
  CHECK(traj.x[1](0) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("superposition of disturbance responses") {
  std::mt19937_64 rng(7);
  const RobustOcp ocp = testing::random_instance(rng, 3, 2, 5, 4, 2);
  const int N = 5;

  // an arbitrary gain schedule defines a response satisfying the recursion
  GainSchedule gains;
  gains.horizon = N;
  gains.nx = 3;
  gains.nu = 2;
  for (int j = 0; j < N; ++j) {
    gains.gains.push_back(testing::random_matrix(rng, (N - 1 - j) * 2, 3));
  }
  SystemResponse response;
  response.horizon = N;
  response.nx = 3;
  response.nu = 2;
  response.nw = 3;
  response.phix.resize(N);
  response.phiu.resize(N);
  for (int j = 0; j < N; ++j) {
    GainColumn col;
    col.gains = gains.gains[j];
    ResponseColumn rc = forward_propagate(ocp.system, col, j);
    response.phix[j] = rc.phix;
    response.phiu[j] = rc.phiu;
  }

  std::vector<Eigen::VectorXd> v, w;
  Eigen::VectorXd x0 = testing::random_matrix(rng, 3, 1);
  for (int k = 0; k < N; ++k) {
    v.push_back(testing::random_matrix(rng, 2, 1));
    w.push_back(testing::random_matrix(rng, 3, 1));
  }

  const Trajectory traj = simulate_closed_loop(ocp.system, x0, v, response, w);
  const Trajectory nominal =
      simulate_closed_loop(ocp.system, x0, v, response,
                           std::vector<Eigen::VectorXd>(N, Eigen::VectorXd::Zero(3)));

  // x_k = z_k + sum_j Phi^x_{k,j} w_j
  for (int k = 1; k <= N; ++k) {
    Eigen::VectorXd expected = nominal.x[k];
    for (int j = 0; j < k; ++j) expected += response.state_map(k, j) * w[j];
    CHECK((traj.x[k] - expected).lpNorm<Eigen::Infinity>() < 1e-10);
  }

  // additivity of the deviation in the disturbance
  std::vector<Eigen::VectorXd> w1 = w, w2 = w, w12(N);
  for (int k = 0; k < N; ++k) {
    w2[k] = testing::random_matrix(rng, 3, 1);
    w12[k] = w1[k] + w2[k];
    w12[k] /= 2.0;  // stay within scale; linearity is scale-free anyway
    w1[k] /= 2.0;
    w2[k] /= 2.0;
  }
  const Trajectory t1 = simulate_closed_loop(ocp.system, x0, v, response, w1);
  const Trajectory t2 = simulate_closed_loop(ocp.system, x0, v, response, w2);
  const Trajectory t12 = simulate_closed_loop(ocp.system, x0, v, response, w12);
  for (int k = 0; k <= N; ++k) {
    const Eigen::VectorXd lhs = t12.x[k] - nominal.x[k];
    const Eigen::VectorXd rhs = (t1.x[k] - nominal.x[k]) + (t2.x[k] - nominal.x[k]);
    CHECK((lhs - rhs).lpNorm<Eigen::Infinity>() < 1e-10);
  }
}

TEST_CASE("simulate rejects mismatched dimensions") {
  const RobustOcp ocp = mass_spring_damper_chain(1, 3);
  std::vector<Eigen::VectorXd> v(3, Eigen::VectorXd::Zero(1));
  std::vector<Eigen::VectorXd> w(2, Eigen::VectorXd::Zero(2));
  CHECK_THROWS_AS(
      simulate_closed_loop(ocp.system, Eigen::VectorXd::Zero(2), v, GainSchedule{}, w),
      std::invalid_argument);
}
