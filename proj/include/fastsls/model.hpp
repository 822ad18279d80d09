#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace fastsls {

/// Discrete linear time-varying system x+ = A_k x + B_k u + E_k w with
/// disturbances w in the unit 2-norm ball.
struct LtvSystem {
  int horizon = 0;  ///< number of stages N
  int nx = 0;       ///< state dimension
  int nu = 0;       ///< input dimension
  int nw = 0;       ///< disturbance dimension (nw <= nx, E_k left-invertible)

  std::vector<Eigen::MatrixXd> A;  ///< N matrices, nx x nx
  std::vector<Eigen::MatrixXd> B;  ///< N matrices, nx x nu
  std::vector<Eigen::MatrixXd> E;  ///< N matrices, nx x nw
};

/// Polytopic stage and terminal constraints in the form
/// g^T (x, u) + b <= 0 row-wise.
struct ConstraintSet {
  std::vector<Eigen::MatrixXd> G;  ///< N matrices, nc x (nx + nu)
  std::vector<Eigen::VectorXd> b;  ///< N vectors, nc
  Eigen::MatrixXd Gf;              ///< nf x nx terminal rows
  Eigen::VectorXd bf;              ///< nf terminal offsets

  int stage_rows() const { return G.empty() ? 0 : static_cast<int>(G.front().rows()); }
  int terminal_rows() const { return static_cast<int>(Gf.rows()); }
};

/// Quadratic weights: (Q, R, P) price the nominal trajectory, the barred
/// counterparts price the closed-loop disturbance response.
struct CostWeights {
  Eigen::MatrixXd Q, R, P;
  Eigen::MatrixXd Qbar, Rbar, Pbar;
};

/// Immutable robust optimal control problem instance.
struct RobustOcp {
  LtvSystem system;
  ConstraintSet constraints;
  CostWeights weights;
};

enum class ValidationIssue {
  DimensionMismatch,
  NotPositiveDefinite,
  RankDeficientE,
};

class ValidationError : public std::runtime_error {
 public:
  ValidationError(ValidationIssue issue, std::string location)
      : std::runtime_error(describe(issue, location)),
        issue_(issue),
        location_(std::move(location)) {}

  ValidationIssue issue() const { return issue_; }
  const std::string& location() const { return location_; }

 private:
  static std::string describe(ValidationIssue issue, const std::string& location);

  ValidationIssue issue_;
  std::string location_;
};

/// Checks all structural invariants of the problem instance. Throws
/// ValidationError naming the first violated invariant.
void validate(const RobustOcp& ocp);

/// Benchmark generator: chain of `masses` mass-spring-damper elements fixed
/// at one end, one force input per mass, forward-Euler discretized.
///
/// State ordering is (p_1..p_L, pdot_1..pdot_L). Constraint rows are the box
/// |x|_inf <= 4, |u|_inf <= 4 as (+coord, -coord) pairs, states first; the
/// terminal block repeats the state rows.
RobustOcp mass_spring_damper_chain(int masses, int horizon, double dt = 0.1,
                                   double mass = 1.0, double spring = 10.0,
                                   double damper = 2.0);

}  // namespace fastsls
