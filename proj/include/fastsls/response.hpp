#pragma once

#include <Eigen/Dense>

#include <vector>

#include "fastsls/model.hpp"

namespace fastsls {

/// Closed-loop disturbance response. For each disturbance index j the state
/// maps Phi^x_{k,j} exist for k = j+1..N and the input maps Phi^u_{k,j} for
/// k = j+1..N-1. Blocks of one column are stacked contiguously in k.
struct SystemResponse {
  int horizon = 0;
  int nx = 0, nu = 0, nw = 0;
  std::vector<Eigen::MatrixXd> phix;  ///< column j: (N-j)*nx x nw
  std::vector<Eigen::MatrixXd> phiu;  ///< column j: (N-1-j)*nu x nw

  Eigen::Block<const Eigen::MatrixXd> state_map(int k, int j) const {
    return phix[j].block((k - j - 1) * nx, 0, nx, nw);
  }
  Eigen::Block<const Eigen::MatrixXd> input_map(int k, int j) const {
    return phiu[j].block((k - j - 1) * nu, 0, nu, nw);
  }
  Eigen::Block<Eigen::MatrixXd> state_map(int k, int j) {
    return phix[j].block((k - j - 1) * nx, 0, nx, nw);
  }
  Eigen::Block<Eigen::MatrixXd> input_map(int k, int j) {
    return phiu[j].block((k - j - 1) * nu, 0, nu, nw);
  }
};

/// Time-varying feedback gains K_{k,j} (k = j+1..N-1) from the backward
/// recursions, optionally with the cost-to-go matrices S_{k,j} (k = j+1..N).
struct GainSchedule {
  int horizon = 0;
  int nx = 0, nu = 0;
  std::vector<Eigen::MatrixXd> gains;       ///< column j: (N-1-j)*nu x nx
  std::vector<Eigen::MatrixXd> cost_to_go;  ///< column j: (N-j)*nx x nx, optional

  bool has_cost_to_go() const { return !cost_to_go.empty(); }

  Eigen::Block<const Eigen::MatrixXd> gain(int k, int j) const {
    return gains[j].block((k - j - 1) * nu, 0, nu, nx);
  }
  Eigen::Block<const Eigen::MatrixXd> value(int k, int j) const {
    return cost_to_go[j].block((k - j - 1) * nx, 0, nx, nx);
  }
};

/// Squared row norms beta_{k,j} of the constraint-mapped response, per
/// disturbance index j: stage vectors for k = j+1..N-1 plus a terminal
/// vector at k = N.
struct Tightening {
  int horizon = 0;
  int nc = 0, nf = 0;
  double eps_beta = 0.0;                 ///< floor used when forming sqrt terms
  std::vector<Eigen::VectorXd> stage;    ///< column j: (N-1-j)*nc entries
  std::vector<Eigen::VectorXd> terminal; ///< column j: nf entries

  Eigen::VectorBlock<const Eigen::VectorXd> at(int k, int j) const {
    return stage[j].segment((k - j - 1) * nc, nc);
  }
  Eigen::VectorBlock<Eigen::VectorXd> at(int k, int j) {
    return stage[j].segment((k - j - 1) * nc, nc);
  }
};

/// Dual field eta_{k,j} matching the Tightening index structure.
struct DualField {
  int horizon = 0;
  int nc = 0, nf = 0;
  std::vector<Eigen::VectorXd> stage;
  std::vector<Eigen::VectorXd> terminal;

  Eigen::VectorBlock<const Eigen::VectorXd> at(int k, int j) const {
    return stage[j].segment((k - j - 1) * nc, nc);
  }
};

/// Quadratic stage-cost blocks of the controller subproblem,
/// [Cx Cux^T; Cux Cu] partitioned over the (state, input) columns.
struct CostBlocks {
  Eigen::MatrixXd Cx;   ///< G_x^T diag(eta) G_x + Qbar
  Eigen::MatrixXd Cu;   ///< G_u^T diag(eta) G_u + Rbar
  Eigen::MatrixXd Cux;  ///< G_u^T diag(eta) G_x
};

/// Builds the eta-weighted stage cost blocks; `nx` locates the column split
/// of G between state and input parts. Throws std::invalid_argument on a
/// negative dual component.
CostBlocks stage_cost_blocks(const Eigen::VectorXd& eta, const Eigen::MatrixXd& G,
                             const Eigen::MatrixXd& Qbar, const Eigen::MatrixXd& Rbar, int nx);

/// Terminal variant: Gf^T diag(eta) Gf + Pbar.
Eigen::MatrixXd terminal_cost_block(const Eigen::VectorXd& eta, const Eigen::MatrixXd& Gf,
                                    const Eigen::MatrixXd& Pbar);

/// One column of the backward recursion output.
struct GainColumn {
  Eigen::MatrixXd gains;       ///< (N-1-j)*nu x nx
  Eigen::MatrixXd cost_to_go;  ///< (N-j)*nx x nx (S_{k,j}, k = j+1..N)
  long steps = 0;              ///< number of gain updates performed
};

/// Backward recursion for disturbance index j. `stage_blocks` holds the
/// blocks for k = j+1..N-1 in order; `terminal_block` is Cx_{N,j}.
GainColumn backward_riccati(const LtvSystem& system, const std::vector<CostBlocks>& stage_blocks,
                            const Eigen::MatrixXd& terminal_block, int j);

/// One column of the response produced by the forward recursion.
struct ResponseColumn {
  Eigen::MatrixXd phix;  ///< (N-j)*nx x nw
  Eigen::MatrixXd phiu;  ///< (N-1-j)*nu x nw
};

/// Forward propagation for disturbance index j:
///   Phi^x_{j+1,j} = E_j,  Omega_j = E_j E_j^+,
///   Phi^u_{k,j} = K_{k,j} Omega_j Phi^x_{k,j},
///   Phi^x_{k+1,j} = (A_k + B_k K_{k,j} Omega_j) Phi^x_{k,j}.
/// For square invertible E_j, Omega_j = I and the plain recursion results.
ResponseColumn forward_propagate(const LtvSystem& system, const GainColumn& gains, int j);

struct ControllerOptions {
  bool parallel = true;           ///< run the per-j map on worker threads
  int workers = 0;                ///< 0: FASTSLS_THREADS env or hardware count
  bool keep_cost_to_go = false;   ///< retain S_{k,j} in the schedule
};

struct ControllerResult {
  GainSchedule gains;
  SystemResponse response;
  long riccati_steps = 0;  ///< total gain updates, N(N-1)/2 by construction
};

/// Solves the controller subproblem for a fixed dual field: for each j
/// independently builds the cost blocks, runs the backward recursion and the
/// forward propagation. Output is identical for sequential and parallel runs.
ControllerResult solve_controller(const LtvSystem& system, const ConstraintSet& constraints,
                                  const CostWeights& weights, const DualField& eta,
                                  const ControllerOptions& options = {});

/// Evaluates beta_{k,j,i} = ||g_{k,i}^T (Phi^x; Phi^u)_{k,j}||_2^2 and the
/// terminal analogue over Gf.
Tightening compute_beta(const SystemResponse& response, const ConstraintSet& constraints);

/// Per-stage tightening vectors h^ct_k = sum_{j<k} sqrt(beta_{k,j} + eps),
/// k = 0..N with h^ct_0 = 0; entry N is the terminal vector.
std::vector<Eigen::VectorXd> compute_hct(const Tightening& beta, double eps_beta);

}  // namespace fastsls
