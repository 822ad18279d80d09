#pragma once

#include <Eigen/Dense>

#include <optional>
#include <vector>

#include "fastsls/model.hpp"

namespace fastsls {

enum class QpStatus {
  Solved,
  MaxIterations,
  Infeasible,
};

/// Primal/dual trajectory returned by the nominal QP. Inequality duals mu
/// follow the constraint row order of the problem: entries 0..N-1 are stage
/// duals, entry N holds the terminal duals.
struct NominalSolution {
  std::vector<Eigen::VectorXd> z;       ///< N+1 states
  std::vector<Eigen::VectorXd> v;       ///< N inputs
  std::vector<Eigen::VectorXd> lambda;  ///< N dynamics duals
  std::vector<Eigen::VectorXd> mu;      ///< N+1 inequality duals (>= 0)
  double objective = 0.0;
  QpStatus status = QpStatus::MaxIterations;
  int iterations = 0;

  // achieved KKT residuals at exit
  double stationarity_residual = 0.0;
  double equality_residual = 0.0;
  double inequality_residual = 0.0;
  double complementarity = 0.0;

  /// Concatenates (z_0..z_N, v_0..v_{N-1}) into one primal vector.
  Eigen::VectorXd stacked_primal() const;
};

struct QpSettings {
  double feasibility_tol = 1e-9;
  double complementarity_tol = 1e-9;
  int max_iterations = 100;
  std::optional<NominalSolution> warm_start;
};

/// Stage-structured QP
///   min  sum_k 1/2 x_k' H_k x_k + q_k' x_k,   x_k = (z_k, v_k)
///   s.t. z_{k+1} = A_k z_k + B_k v_k + c_k,   z_0 = x0,
///        C_k x_k + d_k <= 0,                  Cf z_N + df <= 0.
/// The state dimension is fixed; the per-stage input dimension `nv` may
/// exceed the plant input dimension (extra stage variables such as error
/// bounds ride along as costless inputs with zero dynamics columns).
struct TrajectoryQp {
  int horizon = 0;
  int nx = 0;
  int nv = 0;

  std::vector<Eigen::MatrixXd> A, B;
  std::vector<Eigen::VectorXd> c;  ///< dynamics offsets; empty means zero

  std::vector<Eigen::MatrixXd> Hz, Hv;  ///< stage Hessian blocks (no cross term)
  std::vector<Eigen::VectorXd> qz, qv;  ///< stage linear terms; empty means zero
  Eigen::MatrixXd HzN;
  Eigen::VectorXd qzN;  ///< empty means zero

  std::vector<Eigen::MatrixXd> C;  ///< stage rows over (z_k, v_k)
  std::vector<Eigen::VectorXd> d;
  Eigen::MatrixXd Cf;
  Eigen::VectorXd df;
};

/// Interior-point solve of a TrajectoryQp. Each Newton system is factorized
/// stage-wise by a Riccati recursion, so one iteration costs
/// O(N (nx^3 + nv^3)).
NominalSolution solve_trajectory_qp(const TrajectoryQp& qp, const Eigen::VectorXd& x0,
                                    const QpSettings& settings = {});

/// Solves the tightened nominal trajectory problem of a robust OCP. `hct`
/// holds N+1 tightening vectors (stage k = 0..N-1 of length nc, terminal of
/// length nf); h^ct_0 is expected to be zero.
NominalSolution solve_nominal(const RobustOcp& ocp, const Eigen::VectorXd& x0,
                              const std::vector<Eigen::VectorXd>& hct,
                              const QpSettings& settings = {});

}  // namespace fastsls
