#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "fastsls/model.hpp"
#include "fastsls/solver.hpp"

namespace fastsls {

/// One benchmark measurement: a single solve at a grid point.
struct BenchRecord {
  std::string label;
  std::string mode;  ///< "horizon" or "states"
  int masses = 0;
  int horizon = 0;
  int nx = 0, nu = 0;
  int repetition = 0;
  std::uint64_t seed = 0;
  std::string status;
  int iterations = 0;
  long riccati_steps = 0;
  double qp_time_s = 0.0;
  double riccati_time_s = 0.0;
  double total_time_s = 0.0;
};

struct BenchOptions {
  int repetitions = 5;
  std::uint64_t seed = 0;
  bool random_x0 = false;  ///< default: solve from the origin for clean timings
  SolverConfig config;
};

std::vector<BenchRecord> run_horizon_study(int masses, const std::vector<int>& horizons,
                                           const BenchOptions& options = {});
std::vector<BenchRecord> run_states_study(int horizon, const std::vector<int>& mass_counts,
                                          const BenchOptions& options = {});

/// Least-squares slope of log(y) against log(x); empty when fewer than two
/// distinct grid points carry data.
std::optional<double> fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Median of the selected time field per distinct grid value, converged
/// records only, for slope fitting. `field`: "qp", "riccati" or "total".
void collect_medians(const std::vector<BenchRecord>& records, const std::string& mode,
                     const std::string& field, std::vector<double>& grid_out,
                     std::vector<double>& time_out);

/// One trial of the iteration-count study.
struct IterationTrial {
  int trial = 0;
  Eigen::VectorXd x0;
  int iterations = 0;
  std::string status;
};

/// Draws initial states uniformly from the constraint box, rejecting those
/// whose nominal QP under a 10%-inflated reference tightening is infeasible.
/// The reference tightening comes from a converged solve at the origin.
/// Throws std::runtime_error when the acceptance rate collapses.
class FeasibleInitialStateSampler {
 public:
  FeasibleInitialStateSampler(const RobustOcp& ocp, std::uint64_t seed,
                              const SolverConfig& config = {});

  Eigen::VectorXd draw();

 private:
  const RobustOcp& ocp_;
  SolverConfig config_;
  std::vector<Eigen::VectorXd> probe_hct_;
  Eigen::VectorXd lower_, upper_;
  std::mt19937_64 rng_;
};

std::vector<IterationTrial> run_iteration_study(const RobustOcp& ocp, int n_trials,
                                                std::uint64_t seed,
                                                const SolverConfig& config = {});

}  // namespace fastsls
