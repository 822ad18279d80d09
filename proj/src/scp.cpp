#include "fastsls/scp.hpp"

#include <cmath>
#include <stdexcept>

namespace fastsls {

namespace {

constexpr double kTauRegularization = 1e-8;

Eigen::MatrixXd finite_difference_jacobian(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& at,
    int out_dim) {
  Eigen::MatrixXd jac(out_dim, at.size());
  for (Eigen::Index i = 0; i < at.size(); ++i) {
    const double h = 1e-6 * (1.0 + std::abs(at(i)));
    Eigen::VectorXd lo = at, hi = at;
    lo(i) -= h;
    hi(i) += h;
    jac.col(i) = (f(hi) - f(lo)) / (2.0 * h);
  }
  return jac;
}

Eigen::MatrixXd effective_disturbance_entry(const NonlinearModel& model, double tau_j, int j) {
  const bool curvature_active = model.curvature_bound.size() > 0 &&
                                model.curvature_bound.cwiseAbs().maxCoeff() > 0.0;
  const bool e_active = model.E[j].cwiseAbs().maxCoeff() > 0.0;
  if (model.alpha1 == 0.0 && e_active) {
    throw std::invalid_argument("linearize_along: alpha1 = 0 with a nonzero E term");
  }
  if (model.alpha2 == 0.0 && curvature_active) {
    throw std::invalid_argument("linearize_along: alpha2 = 0 with a nonzero curvature term");
  }
  Eigen::MatrixXd entry = Eigen::MatrixXd::Zero(model.nx, model.nw);
  if (e_active) entry += model.E[j] / model.alpha1;
  if (curvature_active) {
    entry += (std::sqrt(static_cast<double>(model.nx)) * tau_j * tau_j / model.alpha2) *
             model.curvature_bound;
  }
  return entry;
}

/// eta_bar' H(M_bar, y): propagate the response with frozen input maps along
/// the trajectory inside y and accumulate the eta-weighted squared row norms.
double weighted_tightening_value(const NonlinearModel& model, const Eigen::VectorXd& y,
                                 const SystemResponse& response, const DualField& eta_bar) {
  const int N = model.horizon;
  const int nx = model.nx;
  const int nu = model.nu;
  const int nc_native = model.constraints.stage_rows();

  auto z_at = [&](int k) { return y.segment(k * nx, nx); };
  auto v_at = [&](int k) { return y.segment((N + 1) * nx + k * nu, nu); };
  auto tau_at = [&](int k) { return y((N + 1) * nx + N * nu + k); };

  std::vector<Eigen::MatrixXd> a(N), b(N);
  for (int k = 0; k < N; ++k) {
    a[k] = model.state_jacobian(z_at(k), v_at(k));
    b[k] = model.input_jacobian(z_at(k), v_at(k));
  }

  double value = 0.0;
  for (int j = 0; j < N; ++j) {
    Eigen::MatrixXd phix = effective_disturbance_entry(model, tau_at(j), j);
    for (int k = j + 1; k <= N - 1; ++k) {
      const auto phiu = response.input_map(k, j);
      const Eigen::VectorXd eta_kj = eta_bar.at(k, j);
      const Eigen::MatrixXd native_rows = model.constraints.G[k].leftCols(nx) * phix +
                                          model.constraints.G[k].rightCols(nu) * phiu;
      value += eta_kj.head(nc_native).dot(native_rows.rowwise().squaredNorm());
      // tau-bounding rows: unit maps on the stacked (state, input) response
      value += eta_kj.segment(nc_native, nx).dot(phix.rowwise().squaredNorm());
      value += eta_kj.tail(nu).dot(phiu.rowwise().squaredNorm());
      phix = a[k] * phix + b[k] * phiu;
    }
    const Eigen::MatrixXd terminal_rows = model.constraints.Gf * phix;
    value += eta_bar.terminal[j].dot(terminal_rows.rowwise().squaredNorm());
  }
  return value;
}

Eigen::VectorXd stack_y(const std::vector<Eigen::VectorXd>& z,
                        const std::vector<Eigen::VectorXd>& v, const Eigen::VectorXd& tau) {
  const int N = static_cast<int>(v.size());
  const int nx = static_cast<int>(z.front().size());
  const int nu = static_cast<int>(v.front().size());
  Eigen::VectorXd y((N + 1) * nx + N * nu + N);
  for (int k = 0; k <= N; ++k) y.segment(k * nx, nx) = z[k];
  for (int k = 0; k < N; ++k) y.segment((N + 1) * nx + k * nu, nu) = v[k];
  y.tail(N) = tau;
  return y;
}

}  // namespace

void validate_model(const NonlinearModel& model, const Eigen::VectorXd& probe_z,
                    const Eigen::VectorXd& probe_v, double jacobian_tol) {
  if (model.horizon < 1) throw std::invalid_argument("validate_model: horizon");
  if (model.nx < 1 || model.nu < 1 || model.nw < 1) {
    throw std::invalid_argument("validate_model: dimensions");
  }
  if (static_cast<int>(model.E.size()) != model.horizon) {
    throw std::invalid_argument("validate_model: E count");
  }
  if (model.alpha1 < 0.0 || model.alpha2 < 0.0 || model.alpha1 + model.alpha2 > 1.0 + 1e-12) {
    throw std::invalid_argument("validate_model: alphas must be >= 0 with alpha1 + alpha2 <= 1");
  }
  const bool curvature_active = model.curvature_bound.size() > 0 &&
                                model.curvature_bound.cwiseAbs().maxCoeff() > 0.0;
  if (curvature_active && model.nw != model.nx) {
    throw std::invalid_argument(
        "validate_model: curvature term requires square disturbance entry (nw == nx)");
  }

  const Eigen::MatrixXd jz = model.state_jacobian(probe_z, probe_v);
  const Eigen::MatrixXd jz_fd = finite_difference_jacobian(
      [&](const Eigen::VectorXd& z) { return model.dynamics(z, probe_v); }, probe_z, model.nx);
  if ((jz - jz_fd).cwiseAbs().maxCoeff() > jacobian_tol) {
    throw std::invalid_argument("validate_model: state Jacobian disagrees with finite differences");
  }
  const Eigen::MatrixXd jv = model.input_jacobian(probe_z, probe_v);
  const Eigen::MatrixXd jv_fd = finite_difference_jacobian(
      [&](const Eigen::VectorXd& v) { return model.dynamics(probe_z, v); }, probe_v, model.nx);
  if ((jv - jv_fd).cwiseAbs().maxCoeff() > jacobian_tol) {
    throw std::invalid_argument("validate_model: input Jacobian disagrees with finite differences");
  }
}

ScpInnerProblem linearize_along(const NonlinearModel& model,
                                const std::vector<Eigen::VectorXd>& z_bar,
                                const std::vector<Eigen::VectorXd>& v_bar,
                                const Eigen::VectorXd& tau_bar) {
  const int N = model.horizon;
  const int nx = model.nx;
  const int nu = model.nu;
  const int nc_native = model.constraints.stage_rows();
  const int nc = nc_native + nx + nu;

  ScpInnerProblem inner;
  inner.stage_rows = nc;
  SlsProblem& p = inner.problem;

  p.qp.horizon = N;
  p.qp.nx = nx;
  p.qp.nv = nu + 1;  // (delta v, delta tau)

  p.tube_system.horizon = N;
  p.tube_system.nx = nx;
  p.tube_system.nu = nu;
  p.tube_system.nw = model.nw;

  p.qp.A.resize(N);
  p.qp.B.resize(N);
  p.qp.c.resize(N);
  p.tube_system.A.resize(N);
  p.tube_system.B.resize(N);
  p.tube_system.E.resize(N);

  for (int k = 0; k < N; ++k) {
    const Eigen::MatrixXd a = model.state_jacobian(z_bar[k], v_bar[k]);
    const Eigen::MatrixXd b = model.input_jacobian(z_bar[k], v_bar[k]);
    p.qp.A[k] = a;
    p.qp.B[k] = Eigen::MatrixXd::Zero(nx, nu + 1);
    p.qp.B[k].leftCols(nu) = b;
    p.qp.c[k] = model.dynamics(z_bar[k], v_bar[k]) - z_bar[k + 1];
    p.tube_system.A[k] = a;
    p.tube_system.B[k] = b;
    p.tube_system.E[k] = effective_disturbance_entry(model, tau_bar(k), k);
  }

  // quadratic cost in the step, expanded around the current nominal; the tau
  // block carries a small regularizer so the inner QP stays strictly convex
  p.qp.Hz.assign(N, 2.0 * model.weights.Q);
  p.qp.HzN = 2.0 * model.weights.P;
  p.qp.qz.resize(N);
  for (int k = 0; k < N; ++k) p.qp.qz[k] = 2.0 * model.weights.Q * z_bar[k];
  p.qp.qzN = 2.0 * model.weights.P * z_bar[N];
  Eigen::MatrixXd hv = Eigen::MatrixXd::Zero(nu + 1, nu + 1);
  hv.topLeftCorner(nu, nu) = 2.0 * model.weights.R;
  hv(nu, nu) = 2.0 * kTauRegularization;
  p.qp.Hv.assign(N, hv);
  p.qp.qv.resize(N);
  for (int k = 0; k < N; ++k) {
    p.qp.qv[k] = Eigen::VectorXd::Zero(nu + 1);
    p.qp.qv[k].head(nu) = 2.0 * model.weights.R * v_bar[k];
    p.qp.qv[k](nu) = 2.0 * kTauRegularization * tau_bar(k);
  }

  // nominal rows over (dz, dv, dtau): native rows, then the tau-bounding rows
  p.qp.C.resize(N);
  p.qp.d.resize(N);
  p.tube_rows.G.resize(N);
  p.tube_rows.b.resize(N);
  for (int k = 0; k < N; ++k) {
    Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(nc, nx + nu + 1);
    rows.topLeftCorner(nc_native, nx + nu) = model.constraints.G[k];
    rows.bottomRightCorner(nx + nu, 1).setConstant(-1.0);
    p.qp.C[k] = rows;

    Eigen::VectorXd offsets(nc);
    offsets.head(nc_native) = model.constraints.G[k].leftCols(nx) * z_bar[k] +
                              model.constraints.G[k].rightCols(nu) * v_bar[k] +
                              model.constraints.b[k];
    offsets.tail(nx + nu).setConstant(-tau_bar(k));
    p.qp.d[k] = offsets;

    Eigen::MatrixXd tube = Eigen::MatrixXd::Zero(nc, nx + nu);
    tube.topRows(nc_native) = model.constraints.G[k];
    tube.bottomRows(nx + nu).setIdentity();
    p.tube_rows.G[k] = tube;
    p.tube_rows.b[k] = Eigen::VectorXd::Zero(nc);  // unused by the tube machinery
  }
  p.qp.Cf = model.constraints.Gf;
  p.qp.df = model.constraints.Gf * z_bar[N] + model.constraints.bf;
  p.tube_rows.Gf = model.constraints.Gf;
  p.tube_rows.bf = model.constraints.bf;

  p.weights = model.weights;
  return inner;
}

Eigen::VectorXd gamma_eta_term(const NonlinearModel& model,
                               const std::vector<Eigen::VectorXd>& z_bar,
                               const std::vector<Eigen::VectorXd>& v_bar,
                               const Eigen::VectorXd& tau_bar, const SystemResponse& response,
                               const DualField& eta_bar) {
  const Eigen::VectorXd y0 = stack_y(z_bar, v_bar, tau_bar);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(y0.size());
  for (Eigen::Index i = 0; i < y0.size(); ++i) {
    const double h = 1e-6 * (1.0 + std::abs(y0(i)));
    Eigen::VectorXd hi = y0, lo = y0;
    hi(i) += h;
    lo(i) -= h;
    grad(i) = (weighted_tightening_value(model, hi, response, eta_bar) -
               weighted_tightening_value(model, lo, response, eta_bar)) /
              (2.0 * h);
  }
  return grad;
}

ScpState scp_solve(const NonlinearModel& model, const Eigen::VectorXd& x0,
                   const SolverConfig& inner_config, double outer_tol,
                   int max_outer_iterations) {
  const int N = model.horizon;
  const int nx = model.nx;
  const int nu = model.nu;

  ScpState state;
  state.z.assign(N + 1, Eigen::VectorXd::Zero(nx));
  state.v.assign(N, Eigen::VectorXd::Zero(nu));
  state.tau = Eigen::VectorXd::Zero(N);

  // initial guess: zero inputs, forward rollout of the dynamics
  state.z[0] = x0;
  for (int k = 0; k < N; ++k) state.z[k + 1] = model.dynamics(state.z[k], state.v[k]);

  bool have_dual = false;

  for (int outer = 1; outer <= max_outer_iterations; ++outer) {
    ScpInnerProblem inner = linearize_along(model, state.z, state.v, state.tau);

    if (have_dual) {
      const Eigen::VectorXd gamma =
          gamma_eta_term(model, state.z, state.v, state.tau, state.inner.response, state.eta);
      for (int k = 0; k < N; ++k) {
        inner.problem.qp.qz[k] += gamma.segment(k * nx, nx);
        inner.problem.qp.qv[k].head(nu) += gamma.segment((N + 1) * nx + k * nu, nu);
        inner.problem.qp.qv[k](nu) += gamma((N + 1) * nx + N * nu + k);
      }
      inner.problem.qp.qzN += gamma.segment(N * nx, nx);
    }

    SlsSolution sol = solve_structured(inner.problem, x0 - state.z[0], inner_config);
    ++state.inner_solves;

    if (sol.status == SolveStatus::Infeasible) {
      state.status = ScpStatus::InnerInfeasible;
      state.infeasible_at = outer;
      state.inner = std::move(sol);
      return state;
    }

    double step_norm = 0.0;
    for (int k = 0; k <= N; ++k) {
      step_norm = std::max(step_norm, sol.nominal.z[k].lpNorm<Eigen::Infinity>());
    }
    for (int k = 0; k < N; ++k) {
      step_norm = std::max(step_norm, sol.nominal.v[k].lpNorm<Eigen::Infinity>());
    }
    state.step_norms.push_back(step_norm);

    for (int k = 0; k <= N; ++k) state.z[k] += sol.nominal.z[k];
    for (int k = 0; k < N; ++k) {
      state.v[k] += sol.nominal.v[k].head(nu);
      state.tau(k) += sol.nominal.v[k](nu);
    }
    state.eta = sol.duals;
    state.inner = std::move(sol);
    have_dual = true;

    if (step_norm <= outer_tol) {
      state.status = ScpStatus::Converged;
      return state;
    }
    ++state.iterations;
  }

  state.status = ScpStatus::MaxOuterIterations;
  return state;
}

NonlinearModel scp_demo_model(const std::string& name, int horizon) {
  if (name == "linear") {
    const RobustOcp base = mass_spring_damper_chain(1, horizon);
    NonlinearModel model;
    model.horizon = horizon;
    model.nx = base.system.nx;
    model.nu = base.system.nu;
    model.nw = base.system.nw;
    const Eigen::MatrixXd a = base.system.A[0];
    const Eigen::MatrixXd b = base.system.B[0];
    model.dynamics = [a, b](const Eigen::VectorXd& z, const Eigen::VectorXd& v) {
      return Eigen::VectorXd(a * z + b * v);
    };
    model.state_jacobian = [a](const Eigen::VectorXd&, const Eigen::VectorXd&) { return a; };
    model.input_jacobian = [b](const Eigen::VectorXd&, const Eigen::VectorXd&) { return b; };
    model.curvature_bound = Eigen::MatrixXd::Zero(model.nx, model.nx);
    model.alpha1 = 1.0;
    model.alpha2 = 0.0;
    model.E = base.system.E;
    model.constraints = base.constraints;
    model.weights = base.weights;
    return model;
  }
  if (name == "sine") {
    NonlinearModel model;
    model.horizon = horizon;
    model.nx = 1;
    model.nu = 1;
    model.nw = 1;
    model.dynamics = [](const Eigen::VectorXd& z, const Eigen::VectorXd& v) {
      Eigen::VectorXd out(1);
      out(0) = z(0) + 0.1 * std::sin(z(0)) + v(0);
      return out;
    };
    model.state_jacobian = [](const Eigen::VectorXd& z, const Eigen::VectorXd&) {
      Eigen::MatrixXd jac(1, 1);
      jac(0, 0) = 1.0 + 0.1 * std::cos(z(0));
      return jac;
    };
    model.input_jacobian = [](const Eigen::VectorXd&, const Eigen::VectorXd&) {
      return Eigen::MatrixXd::Identity(1, 1);
    };
    model.curvature_bound = 0.1 * Eigen::MatrixXd::Identity(1, 1);
    model.alpha1 = 0.5;
    model.alpha2 = 0.5;
    model.E.assign(horizon, 0.1 * Eigen::MatrixXd::Identity(1, 1));
    Eigen::MatrixXd g(4, 2);
    g << 1, 0, -1, 0, 0, 1, 0, -1;
    model.constraints.G.assign(horizon, g);
    model.constraints.b.assign(horizon, Eigen::VectorXd::Constant(4, -4.0));
    Eigen::MatrixXd gf(2, 1);
    gf << 1, -1;
    model.constraints.Gf = gf;
    model.constraints.bf = Eigen::VectorXd::Constant(2, -4.0);
    model.weights.Q = 3.0 * Eigen::MatrixXd::Identity(1, 1);
    model.weights.P = model.weights.Q;
    model.weights.R = Eigen::MatrixXd::Identity(1, 1);
    model.weights.Qbar = model.weights.Q;
    model.weights.Pbar = model.weights.P;
    model.weights.Rbar = model.weights.R;
    return model;
  }
  throw std::invalid_argument("unknown demo model: " + name);
}

std::vector<std::string> scp_demo_model_names() { return {"linear", "sine"}; }

}  // namespace fastsls
