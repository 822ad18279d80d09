#pragma once

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <vector>

#include "fastsls/model.hpp"
#include "fastsls/solver.hpp"

namespace fastsls {

/// Nonlinear robust control model z+ = phi(z, v) + E w with a worst-case
/// curvature bound on phi. The inner convex subproblems add per-stage
/// linearization-error bounds tau_k to the nominal variable block.
struct NonlinearModel {
  int horizon = 0;
  int nx = 0, nu = 0, nw = 0;

  std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)> dynamics;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&, const Eigen::VectorXd&)>
      state_jacobian;  ///< d phi / d z, nx x nx
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&, const Eigen::VectorXd&)>
      input_jacobian;  ///< d phi / d v, nx x nu

  Eigen::MatrixXd curvature_bound;  ///< worst-case curvature, nx x nx
  double alpha1 = 0.5;              ///< ellipsoid-splitting weight for E
  double alpha2 = 0.5;              ///< ellipsoid-splitting weight for the curvature term

  std::vector<Eigen::MatrixXd> E;
  ConstraintSet constraints;
  CostWeights weights;
};

/// Checks dimensions, the alpha constraints and the Jacobian callbacks
/// against central finite differences at the probe point.
void validate_model(const NonlinearModel& model, const Eigen::VectorXd& probe_z,
                    const Eigen::VectorXd& probe_v, double jacobian_tol = 1e-5);

/// Convex inner problem produced by linearizing along a nominal trajectory.
/// The per-stage variable block is (z_k, v_k, tau_k); constraint rows are the
/// native rows followed by the nx+nu tau-bounding rows.
struct ScpInnerProblem {
  SlsProblem problem;
  int stage_rows = 0;  ///< total inequality rows per stage
};

/// Linearizes the model along (z_bar, v_bar) with the error bounds tau_bar
/// frozen in the effective disturbance entries
///   E_eff_j = alpha1^-1 E_j + alpha2^-1 sqrt(nx) tau_bar_j^2 * curvature.
ScpInnerProblem linearize_along(const NonlinearModel& model,
                                const std::vector<Eigen::VectorXd>& z_bar,
                                const std::vector<Eigen::VectorXd>& v_bar,
                                const Eigen::VectorXd& tau_bar);

/// Gradient correction of the inexact scheme: partial derivatives of
/// eta_bar' H(M_bar, y) with respect to every coordinate of y = (z, v, tau),
/// by central finite differences with step 1e-6 (1 + |y_i|). The frozen
/// controller M_bar is given by the input maps of `response`.
Eigen::VectorXd gamma_eta_term(const NonlinearModel& model,
                               const std::vector<Eigen::VectorXd>& z_bar,
                               const std::vector<Eigen::VectorXd>& v_bar,
                               const Eigen::VectorXd& tau_bar, const SystemResponse& response,
                               const DualField& eta_bar);

enum class ScpStatus {
  Converged,
  MaxOuterIterations,
  InnerInfeasible,
};

struct ScpState {
  std::vector<Eigen::VectorXd> z, v;  ///< current nominal trajectory
  Eigen::VectorXd tau;                ///< linearization-error bounds, length N
  DualField eta;                      ///< dual field of the last inner solve
  SlsSolution inner;                  ///< last inner solution

  int iterations = 0;    ///< steps that moved the nominal beyond tolerance
  int inner_solves = 0;  ///< total inner problems solved
  ScpStatus status = ScpStatus::MaxOuterIterations;
  std::optional<int> infeasible_at;     ///< outer index of a failed inner solve
  std::vector<double> step_norms;       ///< ||delta y||_inf per inner solve
};

/// Sequential convex programming outer loop: linearize, apply the gradient
/// correction, solve the reduced problem with the alternating scheme, update
/// the nominal, until the step norm falls below `outer_tol`.
ScpState scp_solve(const NonlinearModel& model, const Eigen::VectorXd& x0,
                   const SolverConfig& inner_config = {}, double outer_tol = 1e-6,
                   int max_outer_iterations = 30);

/// Built-in demo models: "linear" (a one-mass chain wrapped as callbacks,
/// zero curvature) and "sine" (scalar z+ = z + 0.1 sin z + v).
NonlinearModel scp_demo_model(const std::string& name, int horizon);

/// Names accepted by scp_demo_model.
std::vector<std::string> scp_demo_model_names();

}  // namespace fastsls
