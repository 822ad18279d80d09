#pragma once

#include <Eigen/Dense>

#include <variant>
#include <vector>

#include "fastsls/model.hpp"
#include "fastsls/response.hpp"

namespace fastsls {

/// Closed-loop feedback description: either the disturbance-response input
/// maps directly, or a gain schedule that is first rolled out into one.
using FeedbackLaw = std::variant<SystemResponse, GainSchedule>;

struct Trajectory {
  std::vector<Eigen::VectorXd> x;  ///< N+1 states
  std::vector<Eigen::VectorXd> u;  ///< N inputs
};

/// Simulates x+ = A_k x + B_k u + E_k w under disturbance feedback
/// u_k = v_k + sum_{j<k} Phi^u_{k,j} w_j.
Trajectory simulate_closed_loop(const LtvSystem& system, const Eigen::VectorXd& x0,
                                const std::vector<Eigen::VectorXd>& v, const FeedbackLaw& feedback,
                                const std::vector<Eigen::VectorXd>& w);

}  // namespace fastsls
