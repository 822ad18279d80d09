#pragma once

#include <Eigen/Dense>

#include <random>

#include "fastsls/model.hpp"
#include "fastsls/response.hpp"

namespace fastsls::testing {

/// Uniformly random matrix with entries in [-1, 1].
inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, int rows, int cols) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = unit(rng);
  }
  return m;
}

inline Eigen::MatrixXd random_spd(std::mt19937_64& rng, int dim) {
  const Eigen::MatrixXd m = random_matrix(rng, dim, dim);
  return m * m.transpose() + 0.2 * Eigen::MatrixXd::Identity(dim, dim);
}

/// Random problem instance with a square well-conditioned disturbance entry.
inline RobustOcp random_instance(std::mt19937_64& rng, int nx, int nu, int N, int nc, int nf) {
  RobustOcp ocp;
  ocp.system.horizon = N;
  ocp.system.nx = nx;
  ocp.system.nu = nu;
  ocp.system.nw = nx;
  for (int k = 0; k < N; ++k) {
    ocp.system.A.push_back(random_matrix(rng, nx, nx));
    ocp.system.B.push_back(random_matrix(rng, nx, nu));
    ocp.system.E.push_back(random_matrix(rng, nx, nx) +
                           2.0 * Eigen::MatrixXd::Identity(nx, nx));
  }
  for (int k = 0; k < N; ++k) {
    ocp.constraints.G.push_back(random_matrix(rng, nc, nx + nu));
    ocp.constraints.b.push_back(-Eigen::VectorXd::Ones(nc) * 5.0);
  }
  ocp.constraints.Gf = random_matrix(rng, nf, nx);
  ocp.constraints.bf = -Eigen::VectorXd::Ones(nf) * 5.0;
  ocp.weights.Q = random_spd(rng, nx);
  ocp.weights.R = random_spd(rng, nu);
  ocp.weights.P = random_spd(rng, nx);
  ocp.weights.Qbar = random_spd(rng, nx);
  ocp.weights.Rbar = random_spd(rng, nu);
  ocp.weights.Pbar = random_spd(rng, nx);
  return ocp;
}

/// Random nonnegative dual field matching the constraint row structure.
inline DualField random_dual_field(std::mt19937_64& rng, int N, int nc, int nf) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  DualField eta;
  eta.horizon = N;
  eta.nc = nc;
  eta.nf = nf;
  eta.stage.resize(N);
  eta.terminal.resize(N);
  for (int j = 0; j < N; ++j) {
    eta.stage[j].resize((N - 1 - j) * nc);
    for (Eigen::Index i = 0; i < eta.stage[j].size(); ++i) eta.stage[j](i) = unit(rng);
    eta.terminal[j].resize(nf);
    for (int i = 0; i < nf; ++i) eta.terminal[j](i) = unit(rng);
  }
  return eta;
}

}  // namespace fastsls::testing
