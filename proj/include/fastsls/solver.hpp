#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "fastsls/model.hpp"
#include "fastsls/qp.hpp"
#include "fastsls/response.hpp"

namespace fastsls {

enum class StopMode {
  PrimalDiff,    ///< stop on ||y_i - y_{i-1}||_inf <= eps_m
  KktResidual,   ///< stop when the full KKT bundle residual <= kkt_tol
};

struct SolverConfig {
  double eps_m = 1e-8;      ///< primal-difference stopping tolerance
  double eps_beta = 1e-10;  ///< tightening floor
  int max_iterations = 50;
  bool parallel = true;     ///< parallel per-j controller map
  QpSettings qp;
  StopMode stop_mode = StopMode::PrimalDiff;
  double kkt_tol = 1e-6;            ///< tolerance for StopMode::KktResidual
  bool record_iterates = true;      ///< keep per-iteration snapshots
  double quiescent_dual_tol = 1e-7; ///< first-iteration inactive-constraint cutoff
};

enum class SolveStatus {
  Converged,
  MaxIterations,
  Infeasible,
};

/// Wall time of each phase of one outer iteration, nanoseconds.
struct IterationTelemetry {
  std::int64_t qp_ns = 0;
  std::int64_t dual_update_ns = 0;
  std::int64_t riccati_ns = 0;
  std::int64_t tightening_ns = 0;
  int qp_iterations = 0;
  long riccati_steps = 0;
};

/// Full snapshot of one outer iteration (kept when record_iterates is set).
struct IterateSnapshot {
  NominalSolution nominal;   ///< QP solution of this iteration
  SystemResponse response;   ///< controller solve of this iteration
  Tightening beta_bar;       ///< tightening the QP of this iteration saw
};

struct SlsSolution {
  NominalSolution nominal;
  GainSchedule gains;
  SystemResponse response;
  Tightening tightening;  ///< beta underlying the final QP and dual field
  DualField duals;
  int iterations = 0;
  SolveStatus status = SolveStatus::MaxIterations;
  std::optional<int> infeasible_at;  ///< iteration index of a failed QP

  std::vector<IterationTelemetry> telemetry;
  std::vector<Eigen::VectorXd> y_history;  ///< stacked (z, v) per iteration
  std::vector<IterateSnapshot> snapshots;

  std::int64_t total_qp_ns() const;
  std::int64_t total_riccati_ns() const;
  std::int64_t total_ns() const;
};

/// Evaluates eta_{k,j} = mu_k / (2 sqrt(beta_bar_{k,j} + eps_beta)) for
/// k = j+1..N-1 plus the terminal row block at k = N.
DualField update_duals(const std::vector<Eigen::VectorXd>& mu, const Tightening& beta_bar,
                       double eps_beta);

/// Generalized problem form consumed by the alternating scheme. A RobustOcp
/// lowers into this directly; the sequential-convexification layer also uses
/// it with extra per-stage variables riding along in the QP input block. The
/// nominal rows (qp.C) and the tube rows (tube_rows, over the plant's (x, u)
/// space) must agree in count and order, since the inequality duals of the
/// former weight the latter in the controller subproblem.
struct SlsProblem {
  TrajectoryQp qp;          ///< nominal QP data; d holds offsets without tightening
  LtvSystem tube_system;    ///< dynamics and disturbance entries of the response
  ConstraintSet tube_rows;  ///< row maps defining the tightening terms
  CostWeights weights;      ///< barred entries drive the controller subproblem
};

/// Runs the alternating scheme: tightened nominal QP, dual update, controller
/// recursions, tightening update, until the nominal trajectory settles.
SlsSolution solve(const RobustOcp& ocp, const Eigen::VectorXd& x0, const SolverConfig& config = {});

/// Same scheme on the generalized form.
SlsSolution solve_structured(const SlsProblem& problem, const Eigen::VectorXd& x0,
                             const SolverConfig& config = {});

struct ClosedLoopStep {
  Eigen::VectorXd x, u, w;
  Eigen::VectorXd stage_margins;  ///< -(G_0 (x,u) + b_0), row-wise
  Eigen::VectorXd next_state_tightening;  ///< h^ct_1 of this step's solve
  bool violated = false;
  int iterations = 0;
  SolveStatus status = SolveStatus::MaxIterations;
  std::int64_t solve_ns = 0;
};

struct ClosedLoopTrace {
  std::vector<ClosedLoopStep> steps;
  std::optional<int> failed_step;  ///< first step whose solve failed
  bool completed() const { return !failed_step.has_value(); }
};

/// Receding-horizon rollout: at each step solves from the measured state,
/// applies u = v_0, advances the dynamics with the sampled disturbance and
/// warm-starts the next solve. `disturbance` must return vectors in the unit
/// 2-norm ball.
ClosedLoopTrace solve_receding_horizon(const RobustOcp& ocp, const Eigen::VectorXd& x0, int steps,
                                       const std::function<Eigen::VectorXd(int)>& disturbance,
                                       const SolverConfig& config = {});

}  // namespace fastsls
