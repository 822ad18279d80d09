#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "fastsls/model.hpp"
#include "fastsls/qp.hpp"
#include "fastsls/response.hpp"

namespace fastsls {

/// Outcome of the independent correctness checks. Residuals are maxima over
/// all evaluated rows; a negative sample count marks a skipped check.
struct VerificationReport {
  double max_cone_residual = 0.0;         ///< cone-sum constraint values (<= 0 wanted)
  double max_nominal_dyn_residual = 0.0;  ///< nominal dynamics + initial state
  double max_propagation_residual = 0.0;  ///< response recursion residual
  double max_complementarity = 0.0;
  long samples = 0;
  long violations = 0;
  bool robustness_skipped = false;
  double tolerance = 0.0;

  bool feasibility_pass = false;
  bool complementarity_pass = false;
  bool robustness_pass = false;
};

class InsufficientHistory : public std::runtime_error {
 public:
  InsufficientHistory() : std::runtime_error("need at least 3 recorded iterates") {}
};

/// One response column computed by a dense equality-constrained QP solve of
/// the controller subproblem; test oracle, independent of the recursions.
struct OracleColumn {
  Eigen::MatrixXd phix;  ///< (N-j)*nx x nw
  Eigen::MatrixXd phiu;  ///< (N-1-j)*nu x nw
};

/// Assembles the controller subproblem for disturbance index j over the
/// stacked response blocks and solves the dense KKT system directly.
/// Intended for small test instances.
OracleColumn dense_controller_oracle(const LtvSystem& system, const ConstraintSet& constraints,
                                     const CostWeights& weights, const DualField& eta, int j);

/// Evaluates every cone-sum constraint with exact 2-norm terms, the nominal
/// dynamics residuals and the response propagation residuals.
VerificationReport check_socp_feasibility(const RobustOcp& ocp, const Eigen::VectorXd& x0,
                                          const NominalSolution& nominal,
                                          const SystemResponse& response, double tol = 1e-6);

/// Samples disturbance sequences uniformly on the unit sphere, simulates the
/// closed loop and counts constraint violations. n_samples = 0 skips.
VerificationReport monte_carlo_robustness(const RobustOcp& ocp, const Eigen::VectorXd& x0,
                                          const NominalSolution& nominal,
                                          const SystemResponse& response, long n_samples,
                                          std::uint64_t seed);

/// Max over all rows of mu_i |g_i^T (z, v) + b_i + h^ct_i| for the tightened
/// constraints.
double check_complementarity(const RobustOcp& ocp, const NominalSolution& nominal,
                             const Tightening& beta_bar, double eps_beta);

/// Contraction ratios r_i = ||y_{i+1} - y_last|| / ||y_i - y_last|| for every
/// i with a nonzero denominator. Throws InsufficientHistory for fewer than 3
/// iterates.
std::vector<double> estimate_convergence_rate(const std::vector<Eigen::VectorXd>& y_history);

}  // namespace fastsls
