#include "fastsls/response.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <stdexcept>

#include "fastsls/parallel.hpp"

namespace fastsls {

CostBlocks stage_cost_blocks(const Eigen::VectorXd& eta, const Eigen::MatrixXd& G,
                             const Eigen::MatrixXd& Qbar, const Eigen::MatrixXd& Rbar, int nx) {
  if ((eta.array() < 0.0).any()) {
    throw std::invalid_argument("stage_cost_blocks: negative dual component");
  }
  const int nu = static_cast<int>(G.cols()) - nx;
  const auto gx = G.leftCols(nx);
  const auto gu = G.rightCols(nu);
  CostBlocks blocks;
  blocks.Cx = gx.transpose() * eta.asDiagonal() * gx + Qbar;
  blocks.Cu = gu.transpose() * eta.asDiagonal() * gu + Rbar;
  blocks.Cux = gu.transpose() * eta.asDiagonal() * gx;
  return blocks;
}

Eigen::MatrixXd terminal_cost_block(const Eigen::VectorXd& eta, const Eigen::MatrixXd& Gf,
                                    const Eigen::MatrixXd& Pbar) {
  if ((eta.array() < 0.0).any()) {
    throw std::invalid_argument("terminal_cost_block: negative dual component");
  }
  return Gf.transpose() * eta.asDiagonal() * Gf + Pbar;
}

GainColumn backward_riccati(const LtvSystem& system, const std::vector<CostBlocks>& stage_blocks,
                            const Eigen::MatrixXd& terminal_block, int j) {
  const int N = system.horizon;
  const int nx = system.nx;
  const int nu = system.nu;
  const int steps = N - 1 - j;

  GainColumn out;
  out.gains.resize(steps * nu, nx);
  out.cost_to_go.resize((N - j) * nx, nx);

  Eigen::MatrixXd s_next = 0.5 * (terminal_block + terminal_block.transpose());
  out.cost_to_go.bottomRows(nx) = s_next;

  for (int k = N - 1; k >= j + 1; --k) {
    const CostBlocks& c = stage_blocks[k - (j + 1)];
    const Eigen::MatrixXd& a = system.A[k];
    const Eigen::MatrixXd& b = system.B[k];

    const Eigen::MatrixXd inner = c.Cu + b.transpose() * s_next * b;
    Eigen::LLT<Eigen::MatrixXd> llt(inner);
    if (llt.info() != Eigen::Success) {
      throw std::runtime_error("backward_riccati: singular inner matrix at stage " +
                               std::to_string(k));
    }
    const Eigen::MatrixXd gain = -llt.solve(c.Cux + b.transpose() * s_next * a);
    Eigen::MatrixXd s = c.Cx + a.transpose() * s_next * a +
                        (c.Cux.transpose() + a.transpose() * s_next * b) * gain;
    s = 0.5 * (s + s.transpose());  // suppress asymmetry drift

    out.gains.block((k - j - 1) * nu, 0, nu, nx) = gain;
    out.cost_to_go.block((k - j - 1) * nx, 0, nx, nx) = s;
    s_next = s;
    ++out.steps;
  }
  return out;
}

ResponseColumn forward_propagate(const LtvSystem& system, const GainColumn& gains, int j) {
  const int N = system.horizon;
  const int nx = system.nx;
  const int nu = system.nu;
  const int nw = system.nw;

  ResponseColumn col;
  col.phix.resize((N - j) * nx, nw);
  col.phiu.resize((N - 1 - j) * nu, nw);

  // Omega_j = E_j E_j^+ via thin QR; exactly the identity when E_j is square.
  Eigen::MatrixXd omega;
  const bool square = (nw == nx);
  if (!square) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(system.E[j]);
    const Eigen::MatrixXd q_thin =
        qr.householderQ() * Eigen::MatrixXd::Identity(nx, nw);
    omega = q_thin * q_thin.transpose();
  }

  Eigen::MatrixXd phix_k = system.E[j];
  col.phix.topRows(nx) = phix_k;

  for (int k = j + 1; k <= N - 1; ++k) {
    const auto gain = gains.gains.block((k - j - 1) * nu, 0, nu, nx);
    const Eigen::MatrixXd feedback =
        square ? Eigen::MatrixXd(gain * phix_k) : Eigen::MatrixXd(gain * (omega * phix_k));
    col.phiu.block((k - j - 1) * nu, 0, nu, nw) = feedback;
    phix_k = system.A[k] * phix_k + system.B[k] * feedback;
    col.phix.block((k - j) * nx, 0, nx, nw) = phix_k;
  }
  return col;
}

ControllerResult solve_controller(const LtvSystem& system, const ConstraintSet& constraints,
                                  const CostWeights& weights, const DualField& eta,
                                  const ControllerOptions& options) {
  const int N = system.horizon;
  ControllerResult result;
  result.gains.horizon = N;
  result.gains.nx = system.nx;
  result.gains.nu = system.nu;
  result.gains.gains.resize(N);
  if (options.keep_cost_to_go) result.gains.cost_to_go.resize(N);
  result.response.horizon = N;
  result.response.nx = system.nx;
  result.response.nu = system.nu;
  result.response.nw = system.nw;
  result.response.phix.resize(N);
  result.response.phiu.resize(N);

  std::vector<long> steps(N, 0);

  auto solve_column = [&](int j) {
    std::vector<CostBlocks> blocks;
    blocks.reserve(N - 1 - j);
    for (int k = j + 1; k <= N - 1; ++k) {
      blocks.push_back(
          stage_cost_blocks(eta.at(k, j), constraints.G[k], weights.Qbar, weights.Rbar, system.nx));
    }
    const Eigen::MatrixXd terminal =
        terminal_cost_block(eta.terminal[j], constraints.Gf, weights.Pbar);

    GainColumn gains = backward_riccati(system, blocks, terminal, j);
    ResponseColumn response = forward_propagate(system, gains, j);

    steps[j] = gains.steps;
    result.gains.gains[j] = std::move(gains.gains);
    if (options.keep_cost_to_go) result.gains.cost_to_go[j] = std::move(gains.cost_to_go);
    result.response.phix[j] = std::move(response.phix);
    result.response.phiu[j] = std::move(response.phiu);
  };

  const int workers =
      options.workers > 0 ? options.workers : worker_count(options.parallel);
  parallel_for(N, workers, solve_column);

  for (long s : steps) result.riccati_steps += s;
  return result;
}

Tightening compute_beta(const SystemResponse& response, const ConstraintSet& constraints) {
  const int N = response.horizon;
  const int nx = response.nx;
  const int nu = response.nu;
  const int nc = constraints.stage_rows();
  const int nf = constraints.terminal_rows();

  Tightening beta;
  beta.horizon = N;
  beta.nc = nc;
  beta.nf = nf;
  beta.stage.resize(N);
  beta.terminal.resize(N);

  for (int j = 0; j < N; ++j) {
    beta.stage[j].resize((N - 1 - j) * nc);
    for (int k = j + 1; k <= N - 1; ++k) {
      const auto phix = response.state_map(k, j);
      const auto phiu = response.input_map(k, j);
      const Eigen::MatrixXd rows = constraints.G[k].leftCols(nx) * phix +
                                   constraints.G[k].rightCols(nu) * phiu;
      beta.stage[j].segment((k - j - 1) * nc, nc) = rows.rowwise().squaredNorm();
    }
    const Eigen::MatrixXd rows_f = constraints.Gf * response.state_map(N, j);
    beta.terminal[j] = rows_f.rowwise().squaredNorm();
  }
  return beta;
}

std::vector<Eigen::VectorXd> compute_hct(const Tightening& beta, double eps_beta) {
  const int N = beta.horizon;
  std::vector<Eigen::VectorXd> hct(N + 1);
  for (int k = 0; k <= N - 1; ++k) {
    hct[k] = Eigen::VectorXd::Zero(beta.nc);
    for (int j = 0; j < k; ++j) {
      hct[k] += (beta.at(k, j).array() + eps_beta).sqrt().matrix();
    }
  }
  hct[N] = Eigen::VectorXd::Zero(beta.nf);
  for (int j = 0; j < N; ++j) {
    hct[N] += (beta.terminal[j].array() + eps_beta).sqrt().matrix();
  }
  return hct;
}

}  // namespace fastsls
