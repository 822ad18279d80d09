#include "fastsls/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace fastsls {

namespace {

using Clock = std::chrono::steady_clock;

std::int64_t elapsed_ns(Clock::time_point since) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - since).count();
}

Tightening zero_tightening(int N, int nc, int nf, double eps_beta) {
  Tightening beta;
  beta.horizon = N;
  beta.nc = nc;
  beta.nf = nf;
  beta.eps_beta = eps_beta;
  beta.stage.resize(N);
  beta.terminal.resize(N);
  for (int j = 0; j < N; ++j) {
    beta.stage[j] = Eigen::VectorXd::Zero((N - 1 - j) * nc);
    beta.terminal[j] = Eigen::VectorXd::Zero(nf);
  }
  return beta;
}

double max_dual(const NominalSolution& nominal) {
  double val = 0.0;
  for (const auto& mu_k : nominal.mu) {
    if (mu_k.size() > 0) val = std::max(val, mu_k.maxCoeff());
  }
  return val;
}

Eigen::VectorXd ineq_rows(const TrajectoryQp& qp, const NominalSolution& nominal,
                          const std::vector<Eigen::VectorXd>& hct, int k) {
  if (k == qp.horizon) return qp.Cf * nominal.z[k] + qp.df + hct[k];
  return qp.C[k].leftCols(qp.nx) * nominal.z[k] + qp.C[k].rightCols(qp.nv) * nominal.v[k] +
         qp.d[k] + hct[k];
}

bool strictly_feasible(const TrajectoryQp& qp, const NominalSolution& nominal,
                       const std::vector<Eigen::VectorXd>& hct) {
  for (int k = 0; k <= qp.horizon; ++k) {
    const Eigen::VectorXd rows = ineq_rows(qp, nominal, hct, k);
    if (rows.size() > 0 && rows.maxCoeff() >= 0.0) return false;
  }
  return true;
}

double complementarity_product(const TrajectoryQp& qp, const NominalSolution& nominal,
                               const std::vector<Eigen::VectorXd>& hct) {
  double val = 0.0;
  for (int k = 0; k <= qp.horizon; ++k) {
    const Eigen::VectorXd rows = ineq_rows(qp, nominal, hct, k);
    for (int i = 0; i < rows.size(); ++i) {
      val = std::max(val, nominal.mu[k](i) * std::abs(rows(i)));
    }
  }
  return val;
}

double beta_mismatch(const Tightening& a, const Tightening& b) {
  double val = 0.0;
  for (size_t j = 0; j < a.stage.size(); ++j) {
    if (a.stage[j].size() > 0) {
      val = std::max(val, (a.stage[j] - b.stage[j]).lpNorm<Eigen::Infinity>());
    }
    if (a.terminal[j].size() > 0) {
      val = std::max(val, (a.terminal[j] - b.terminal[j]).lpNorm<Eigen::Infinity>());
    }
  }
  return val;
}

}  // namespace

std::int64_t SlsSolution::total_qp_ns() const {
  std::int64_t t = 0;
  for (const auto& it : telemetry) t += it.qp_ns;
  return t;
}

std::int64_t SlsSolution::total_riccati_ns() const {
  std::int64_t t = 0;
  for (const auto& it : telemetry) t += it.riccati_ns;
  return t;
}

std::int64_t SlsSolution::total_ns() const {
  std::int64_t t = 0;
  for (const auto& it : telemetry) {
    t += it.qp_ns + it.dual_update_ns + it.riccati_ns + it.tightening_ns;
  }
  return t;
}

DualField update_duals(const std::vector<Eigen::VectorXd>& mu, const Tightening& beta_bar,
                       double eps_beta) {
  const int N = beta_bar.horizon;
  DualField eta;
  eta.horizon = N;
  eta.nc = beta_bar.nc;
  eta.nf = beta_bar.nf;
  eta.stage.resize(N);
  eta.terminal.resize(N);
  for (int j = 0; j < N; ++j) {
    eta.stage[j].resize(beta_bar.stage[j].size());
    for (int k = j + 1; k <= N - 1; ++k) {
      const auto beta_kj = beta_bar.at(k, j);
      eta.stage[j].segment((k - j - 1) * beta_bar.nc, beta_bar.nc) =
          (mu[k].array() / (2.0 * (beta_kj.array() + eps_beta).sqrt())).matrix();
    }
    eta.terminal[j] =
        (mu[N].array() / (2.0 * (beta_bar.terminal[j].array() + eps_beta).sqrt())).matrix();
  }
  return eta;
}

SlsSolution solve_structured(const SlsProblem& problem, const Eigen::VectorXd& x0,
                             const SolverConfig& config) {
  const int N = problem.qp.horizon;
  const int nc = problem.tube_rows.stage_rows();
  const int nf = problem.tube_rows.terminal_rows();

  SlsSolution out;
  ControllerOptions ctrl_opts;
  ctrl_opts.parallel = config.parallel;

  TrajectoryQp qp = problem.qp;
  const std::vector<Eigen::VectorXd> base_d = problem.qp.d;
  const Eigen::VectorXd base_df = problem.qp.df;

  Tightening beta_bar = zero_tightening(N, nc, nf, config.eps_beta);
  std::vector<Eigen::VectorXd> hct = compute_hct(beta_bar, config.eps_beta);

  QpSettings qp_settings = config.qp;
  Eigen::VectorXd prev_y;
  bool have_solution = false;

  for (int iteration = 1; iteration <= config.max_iterations; ++iteration) {
    IterationTelemetry tele;

    for (int k = 0; k < N; ++k) qp.d[k] = base_d[k] + hct[k];
    qp.df = base_df + hct[N];

    auto t_qp = Clock::now();
    NominalSolution nominal = solve_trajectory_qp(qp, x0, qp_settings);
    tele.qp_ns = elapsed_ns(t_qp);
    tele.qp_iterations = nominal.iterations;

    if (nominal.status != QpStatus::Solved) {
      const SolveStatus failure = nominal.status == QpStatus::Infeasible
                                      ? SolveStatus::Infeasible
                                      : SolveStatus::MaxIterations;
      if (!have_solution) {
        out.nominal = std::move(nominal);
        out.tightening = beta_bar;
      }
      out.status = failure;
      if (failure == SolveStatus::Infeasible) out.infeasible_at = iteration;
      return out;
    }

    const Eigen::VectorXd y = nominal.stacked_primal();
    out.y_history.push_back(y);

    bool converged = false;
    if (config.stop_mode == StopMode::PrimalDiff && iteration >= 2) {
      converged = (y - prev_y).lpNorm<Eigen::Infinity>() <= config.eps_m;
    }

    auto t_dual = Clock::now();
    DualField eta = update_duals(nominal.mu, beta_bar, config.eps_beta);
    tele.dual_update_ns = elapsed_ns(t_dual);

    auto t_riccati = Clock::now();
    ControllerResult ctrl = solve_controller(problem.tube_system, problem.tube_rows,
                                             problem.weights, eta, ctrl_opts);
    tele.riccati_ns = elapsed_ns(t_riccati);
    tele.riccati_steps = ctrl.riccati_steps;

    auto t_beta = Clock::now();
    Tightening beta_new = compute_beta(ctrl.response, problem.tube_rows);
    beta_new.eps_beta = config.eps_beta;
    std::vector<Eigen::VectorXd> hct_new = compute_hct(beta_new, config.eps_beta);
    tele.tightening_ns = elapsed_ns(t_beta);

    out.telemetry.push_back(tele);
    if (config.record_iterates) {
      out.snapshots.push_back(IterateSnapshot{nominal, ctrl.response, beta_bar});
    }

    // With no active constraints the next QP would reproduce this trajectory,
    // so one pass is already optimal; re-anchor the dual field on the computed
    // response to keep the stored bundle self-consistent.
    bool quiescent = false;
    if (!converged && config.stop_mode == StopMode::PrimalDiff && iteration == 1 &&
        max_dual(nominal) <= config.quiescent_dual_tol &&
        strictly_feasible(qp, nominal, hct_new)) {
      converged = true;
      quiescent = true;
    }

    if (config.stop_mode == StopMode::KktResidual) {
      const double residual =
          std::max({nominal.stationarity_residual, nominal.equality_residual,
                    nominal.inequality_residual, complementarity_product(qp, nominal, hct),
                    beta_mismatch(beta_new, beta_bar)});
      converged = residual <= config.kkt_tol;
    }

    out.nominal = std::move(nominal);
    out.gains = std::move(ctrl.gains);
    out.response = std::move(ctrl.response);
    out.iterations = iteration;
    have_solution = true;

    if (converged) {
      if (quiescent) {
        out.tightening = beta_new;
        out.duals = update_duals(out.nominal.mu, beta_new, config.eps_beta);
      } else {
        out.tightening = beta_bar;
        out.duals = std::move(eta);
      }
      out.status = SolveStatus::Converged;
      return out;
    }

    out.tightening = beta_bar;
    out.duals = std::move(eta);

    prev_y = y;
    beta_bar = std::move(beta_new);
    hct = std::move(hct_new);
    qp_settings.warm_start = out.nominal;
  }

  out.status = SolveStatus::MaxIterations;
  return out;
}

SlsSolution solve(const RobustOcp& ocp, const Eigen::VectorXd& x0, const SolverConfig& config) {
  const LtvSystem& sys = ocp.system;
  const int N = sys.horizon;

  SlsProblem problem;
  problem.qp.horizon = N;
  problem.qp.nx = sys.nx;
  problem.qp.nv = sys.nu;
  problem.qp.A = sys.A;
  problem.qp.B = sys.B;
  problem.qp.Hz.assign(N, 2.0 * ocp.weights.Q);
  problem.qp.Hv.assign(N, 2.0 * ocp.weights.R);
  problem.qp.HzN = 2.0 * ocp.weights.P;
  problem.qp.C = ocp.constraints.G;
  problem.qp.d = ocp.constraints.b;
  problem.qp.Cf = ocp.constraints.Gf;
  problem.qp.df = ocp.constraints.bf;
  problem.tube_system = sys;
  problem.tube_rows = ocp.constraints;
  problem.weights = ocp.weights;

  return solve_structured(problem, x0, config);
}

ClosedLoopTrace solve_receding_horizon(const RobustOcp& ocp, const Eigen::VectorXd& x0, int steps,
                                       const std::function<Eigen::VectorXd(int)>& disturbance,
                                       const SolverConfig& config) {
  const LtvSystem& sys = ocp.system;
  ClosedLoopTrace trace;
  if (steps <= 0) return trace;

  Eigen::VectorXd x = x0;
  SolverConfig step_config = config;
  step_config.record_iterates = false;

  for (int t = 0; t < steps; ++t) {
    const auto t0 = Clock::now();
    SlsSolution sol = solve(ocp, x, step_config);
    const std::int64_t solve_ns = elapsed_ns(t0);

    if (sol.status == SolveStatus::Infeasible) {
      trace.failed_step = t;
      return trace;
    }

    Eigen::VectorXd w = disturbance(t);
    if (w.size() != sys.nw) {
      throw std::invalid_argument("solve_receding_horizon: disturbance dimension");
    }
    if (w.norm() > 1.0 + 1e-12) {
      throw std::invalid_argument("solve_receding_horizon: disturbance outside unit ball");
    }

    ClosedLoopStep step;
    step.x = x;
    step.u = sol.nominal.v[0];
    step.w = w;
    const Eigen::VectorXd rows = ocp.constraints.G[0].leftCols(sys.nx) * step.x +
                                 ocp.constraints.G[0].rightCols(sys.nu) * step.u +
                                 ocp.constraints.b[0];
    step.stage_margins = -rows;
    step.violated = rows.size() > 0 && rows.maxCoeff() > 1e-9;
    step.next_state_tightening = compute_hct(sol.tightening, config.eps_beta)[1];
    step.iterations = sol.iterations;
    step.status = sol.status;
    step.solve_ns = solve_ns;

    x = sys.A[0] * x + sys.B[0] * step.u + sys.E[0] * w;
    trace.steps.push_back(std::move(step));

    // time-shifted warm start for the next solve
    NominalSolution warm = sol.nominal;
    const int N = sys.horizon;
    for (int k = 0; k < N; ++k) warm.z[k] = sol.nominal.z[k + 1];
    for (int k = 0; k + 1 < N; ++k) {
      warm.v[k] = sol.nominal.v[k + 1];
      warm.lambda[k] = sol.nominal.lambda[k + 1];
      warm.mu[k] = sol.nominal.mu[k + 1];
    }
    step_config.qp.warm_start = std::move(warm);
  }
  return trace;
}

}  // namespace fastsls
