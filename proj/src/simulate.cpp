#include "fastsls/simulate.hpp"

#include <stdexcept>

namespace fastsls {

Trajectory simulate_closed_loop(const LtvSystem& system, const Eigen::VectorXd& x0,
                                const std::vector<Eigen::VectorXd>& v, const FeedbackLaw& feedback,
                                const std::vector<Eigen::VectorXd>& w) {
  const int N = system.horizon;
  if (static_cast<int>(v.size()) != N) {
    throw std::invalid_argument("simulate_closed_loop: input sequence length");
  }
  if (static_cast<int>(w.size()) != N) {
    throw std::invalid_argument("simulate_closed_loop: disturbance sequence length");
  }
  if (x0.size() != system.nx) throw std::invalid_argument("simulate_closed_loop: x0 dimension");
  for (const auto& wj : w) {
    if (wj.size() != system.nw) {
      throw std::invalid_argument("simulate_closed_loop: disturbance dimension");
    }
  }

  const SystemResponse* response = std::get_if<SystemResponse>(&feedback);
  SystemResponse rolled;
  if (response == nullptr) {
    // Gains given: roll them out into response maps column by column.
    const GainSchedule& gains = std::get<GainSchedule>(feedback);
    rolled.horizon = N;
    rolled.nx = system.nx;
    rolled.nu = system.nu;
    rolled.nw = system.nw;
    rolled.phix.resize(N);
    rolled.phiu.resize(N);
    for (int j = 0; j < N; ++j) {
      GainColumn col;
      col.gains = gains.gains.empty() ? Eigen::MatrixXd::Zero((N - 1 - j) * system.nu, system.nx)
                                      : gains.gains[j];
      ResponseColumn rc = forward_propagate(system, col, j);
      rolled.phix[j] = std::move(rc.phix);
      rolled.phiu[j] = std::move(rc.phiu);
    }
    response = &rolled;
  }

  Trajectory traj;
  traj.x.resize(N + 1);
  traj.u.resize(N);
  traj.x[0] = x0;
  for (int k = 0; k < N; ++k) {
    Eigen::VectorXd uk = v[k];
    for (int j = 0; j < k; ++j) uk += response->input_map(k, j) * w[j];
    traj.u[k] = uk;
    traj.x[k + 1] = system.A[k] * traj.x[k] + system.B[k] * uk + system.E[k] * w[k];
  }
  return traj;
}

}  // namespace fastsls
