#include "fastsls/verify.hpp"

#include <Eigen/LU>

#include <cmath>
#include <limits>
#include <random>

namespace fastsls {

OracleColumn dense_controller_oracle(const LtvSystem& system, const ConstraintSet& constraints,
                                     const CostWeights& weights, const DualField& eta, int j) {
  const int N = system.horizon;
  const int nx = system.nx;
  const int nu = system.nu;
  const int nw = system.nw;
  const int span = N - 1 - j;  // stages with free inputs

  const int n_var = span * (nx + nu) + nx;
  const int n_eq = (N - j) * nx;

  auto xi_offset = [&](int k) { return (k - j - 1) * (nx + nu); };
  auto up_offset = [&](int k) { return (k - j - 1) * (nx + nu) + nx; };

  // Hessian of the stacked column problem (1/2 x'Hx convention, so twice the
  // quadratic-form blocks).
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n_var, n_var);
  for (int k = j + 1; k <= N - 1; ++k) {
    const auto gx = constraints.G[k].leftCols(nx);
    const auto gu = constraints.G[k].rightCols(nu);
    const Eigen::VectorXd eta_kj = eta.at(k, j);
    const Eigen::MatrixXd cx = gx.transpose() * eta_kj.asDiagonal() * gx + weights.Qbar;
    const Eigen::MatrixXd cu = gu.transpose() * eta_kj.asDiagonal() * gu + weights.Rbar;
    const Eigen::MatrixXd cux = gu.transpose() * eta_kj.asDiagonal() * gx;
    h.block(xi_offset(k), xi_offset(k), nx, nx) = 2.0 * cx;
    h.block(up_offset(k), up_offset(k), nu, nu) = 2.0 * cu;
    h.block(up_offset(k), xi_offset(k), nu, nx) = 2.0 * cux;
    h.block(xi_offset(k), up_offset(k), nx, nu) = 2.0 * cux.transpose();
  }
  const Eigen::MatrixXd cxn =
      constraints.Gf.transpose() * eta.terminal[j].asDiagonal() * constraints.Gf + weights.Pbar;
  h.block(span * (nx + nu), span * (nx + nu), nx, nx) = 2.0 * cxn;

  Eigen::MatrixXd a_eq = Eigen::MatrixXd::Zero(n_eq, n_var);
  a_eq.block(0, 0, nx, nx).setIdentity();  // xi_{j+1} = E_j e_c
  for (int k = j + 1; k <= N - 1; ++k) {
    const int row = (k - j) * nx;
    const int next = (k == N - 1) ? span * (nx + nu) : xi_offset(k + 1);
    a_eq.block(row, next, nx, nx).setIdentity();
    a_eq.block(row, xi_offset(k), nx, nx) = -system.A[k];
    a_eq.block(row, up_offset(k), nx, nu) = -system.B[k];
  }

  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n_var + n_eq, n_var + n_eq);
  kkt.topLeftCorner(n_var, n_var) = h;
  kkt.topRightCorner(n_var, n_eq) = a_eq.transpose();
  kkt.bottomLeftCorner(n_eq, n_var) = a_eq;

  Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
  if (!lu.isInvertible()) {
    throw std::runtime_error("dense_controller_oracle: singular KKT system");
  }

  OracleColumn out;
  out.phix.resize((N - j) * nx, nw);
  out.phiu.resize(span * nu, nw);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_var + n_eq);
  for (int c = 0; c < nw; ++c) {
    rhs.segment(n_var, nx) = system.E[j].col(c);
    const Eigen::VectorXd sol = lu.solve(rhs);
    for (int k = j + 1; k <= N - 1; ++k) {
      out.phix.block((k - j - 1) * nx, c, nx, 1) = sol.segment(xi_offset(k), nx);
      out.phiu.block((k - j - 1) * nu, c, nu, 1) = sol.segment(up_offset(k), nu);
    }
    out.phix.block(span * nx, c, nx, 1) = sol.segment(span * (nx + nu), nx);
  }
  return out;
}

VerificationReport check_socp_feasibility(const RobustOcp& ocp, const Eigen::VectorXd& x0,
                                          const NominalSolution& nominal,
                                          const SystemResponse& response, double tol) {
  const LtvSystem& sys = ocp.system;
  const int N = sys.horizon;
  const int nx = sys.nx;
  const int nu = sys.nu;

  VerificationReport report;
  report.tolerance = tol;

  double cone = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < N; ++k) {
    const Eigen::MatrixXd& g = ocp.constraints.G[k];
    Eigen::VectorXd val = g.leftCols(nx) * nominal.z[k] + g.rightCols(nu) * nominal.v[k] +
                          ocp.constraints.b[k];
    for (int j = 0; j < k; ++j) {
      const Eigen::MatrixXd rows =
          g.leftCols(nx) * response.state_map(k, j) + g.rightCols(nu) * response.input_map(k, j);
      val += rows.rowwise().norm();
    }
    if (val.size() > 0) cone = std::max(cone, val.maxCoeff());
  }
  Eigen::VectorXd val_f = ocp.constraints.Gf * nominal.z[N] + ocp.constraints.bf;
  for (int j = 0; j < N; ++j) {
    val_f += (ocp.constraints.Gf * response.state_map(N, j)).rowwise().norm();
  }
  if (val_f.size() > 0) cone = std::max(cone, val_f.maxCoeff());
  report.max_cone_residual = std::isfinite(cone) ? cone : 0.0;

  double dyn = (nominal.z[0] - x0).lpNorm<Eigen::Infinity>();
  for (int k = 0; k < N; ++k) {
    dyn = std::max(dyn, (nominal.z[k + 1] - sys.A[k] * nominal.z[k] - sys.B[k] * nominal.v[k])
                            .lpNorm<Eigen::Infinity>());
  }
  report.max_nominal_dyn_residual = dyn;

  double prop = 0.0;
  for (int j = 0; j < N; ++j) {
    prop = std::max(
        prop, (response.state_map(j + 1, j) - sys.E[j]).cwiseAbs().maxCoeff());
    for (int k = j + 1; k <= N - 1; ++k) {
      const Eigen::MatrixXd residual = response.state_map(k + 1, j) -
                                       sys.A[k] * response.state_map(k, j) -
                                       sys.B[k] * response.input_map(k, j);
      prop = std::max(prop, residual.cwiseAbs().maxCoeff());
    }
  }
  report.max_propagation_residual = prop;

  report.feasibility_pass = cone <= tol && dyn <= tol && prop <= tol;
  return report;
}

VerificationReport monte_carlo_robustness(const RobustOcp& ocp, const Eigen::VectorXd& x0,
                                          const NominalSolution& nominal,
                                          const SystemResponse& response, long n_samples,
                                          std::uint64_t seed) {
  const LtvSystem& sys = ocp.system;
  const int N = sys.horizon;
  const int nx = sys.nx;
  const int nu = sys.nu;
  const int nw = sys.nw;

  VerificationReport report;
  if (n_samples <= 0) {
    report.robustness_skipped = true;
    report.robustness_pass = true;
    return report;
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double viol_tol = 1e-9;

  std::vector<Eigen::VectorXd> w(N, Eigen::VectorXd(nw));
  long violations = 0;
  for (long sample = 0; sample < n_samples; ++sample) {
    for (int k = 0; k < N; ++k) {
      double norm2 = 0.0;
      do {
        for (int i = 0; i < nw; ++i) w[k](i) = gauss(rng);
        norm2 = w[k].norm();
      } while (norm2 < 1e-12);
      w[k] /= norm2;
    }

    bool violated = false;
    Eigen::VectorXd x = x0;
    for (int k = 0; k < N && !violated; ++k) {
      Eigen::VectorXd u = nominal.v[k];
      for (int j = 0; j < k; ++j) u += response.input_map(k, j) * w[j];
      const Eigen::VectorXd rows = ocp.constraints.G[k].leftCols(nx) * x +
                                   ocp.constraints.G[k].rightCols(nu) * u +
                                   ocp.constraints.b[k];
      if (rows.size() > 0 && rows.maxCoeff() > viol_tol) violated = true;
      x = sys.A[k] * x + sys.B[k] * u + sys.E[k] * w[k];
    }
    if (!violated) {
      const Eigen::VectorXd rows_f = ocp.constraints.Gf * x + ocp.constraints.bf;
      if (rows_f.size() > 0 && rows_f.maxCoeff() > viol_tol) violated = true;
    }
    if (violated) ++violations;
  }

  report.samples = n_samples;
  report.violations = violations;
  report.robustness_pass = violations == 0;
  return report;
}

double check_complementarity(const RobustOcp& ocp, const NominalSolution& nominal,
                             const Tightening& beta_bar, double eps_beta) {
  const std::vector<Eigen::VectorXd> hct = compute_hct(beta_bar, eps_beta);
  const LtvSystem& sys = ocp.system;
  const int N = sys.horizon;
  double val = 0.0;
  for (int k = 0; k < N; ++k) {
    const Eigen::VectorXd rows = ocp.constraints.G[k].leftCols(sys.nx) * nominal.z[k] +
                                 ocp.constraints.G[k].rightCols(sys.nu) * nominal.v[k] +
                                 ocp.constraints.b[k] + hct[k];
    for (int i = 0; i < rows.size(); ++i) {
      val = std::max(val, nominal.mu[k](i) * std::abs(rows(i)));
    }
  }
  const Eigen::VectorXd rows_f =
      ocp.constraints.Gf * nominal.z[N] + ocp.constraints.bf + hct[N];
  for (int i = 0; i < rows_f.size(); ++i) {
    val = std::max(val, nominal.mu[N](i) * std::abs(rows_f(i)));
  }
  return val;
}

std::vector<double> estimate_convergence_rate(const std::vector<Eigen::VectorXd>& y_history) {
  const int n = static_cast<int>(y_history.size());
  if (n < 3) throw InsufficientHistory();
  const Eigen::VectorXd& y_last = y_history.back();
  std::vector<double> ratios;
  for (int i = 0; i + 2 < n; ++i) {
    const double denom = (y_history[i] - y_last).lpNorm<Eigen::Infinity>();
    if (denom == 0.0) continue;
    const double numer = (y_history[i + 1] - y_last).lpNorm<Eigen::Infinity>();
    ratios.push_back(numer / denom);
  }
  return ratios;
}

}  // namespace fastsls
