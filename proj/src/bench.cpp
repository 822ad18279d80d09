#include "fastsls/bench.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "fastsls/qp.hpp"

namespace fastsls {

namespace {

std::string status_name(SolveStatus status) {
  switch (status) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::MaxIterations: return "max-iter";
    case SolveStatus::Infeasible: return "infeasible";
  }
  return "unknown";
}

BenchRecord run_single(const RobustOcp& ocp, const Eigen::VectorXd& x0, const std::string& mode,
                       int masses, int horizon, int repetition, std::uint64_t seed,
                       const SolverConfig& config) {
  SolverConfig cfg = config;
  cfg.record_iterates = false;
  const SlsSolution sol = solve(ocp, x0, cfg);

  BenchRecord record;
  record.label = "msd-L" + std::to_string(masses) + "-N" + std::to_string(horizon);
  record.mode = mode;
  record.masses = masses;
  record.horizon = horizon;
  record.nx = ocp.system.nx;
  record.nu = ocp.system.nu;
  record.repetition = repetition;
  record.seed = seed;
  record.status = status_name(sol.status);
  record.iterations = sol.iterations;
  for (const auto& t : sol.telemetry) record.riccati_steps += t.riccati_steps;
  record.qp_time_s = static_cast<double>(sol.total_qp_ns()) * 1e-9;
  record.riccati_time_s = static_cast<double>(sol.total_riccati_ns()) * 1e-9;
  record.total_time_s = static_cast<double>(sol.total_ns()) * 1e-9;
  return record;
}

std::vector<BenchRecord> run_study(const std::string& mode, const std::vector<int>& mass_grid,
                                   const std::vector<int>& horizon_grid,
                                   const BenchOptions& options) {
  std::vector<BenchRecord> records;
  for (size_t point = 0; point < std::max(mass_grid.size(), horizon_grid.size()); ++point) {
    const int masses = mass_grid.size() == 1 ? mass_grid[0] : mass_grid[point];
    const int horizon = horizon_grid.size() == 1 ? horizon_grid[0] : horizon_grid[point];
    const RobustOcp ocp = mass_spring_damper_chain(masses, horizon);

    std::optional<FeasibleInitialStateSampler> sampler;
    if (options.random_x0) {
      sampler.emplace(ocp, options.seed + point, options.config);
    }
    for (int rep = 0; rep < options.repetitions; ++rep) {
      const Eigen::VectorXd x0 =
          options.random_x0 ? sampler->draw() : Eigen::VectorXd::Zero(ocp.system.nx).eval();
      records.push_back(
          run_single(ocp, x0, mode, masses, horizon, rep, options.seed, options.config));
    }
  }
  return records;
}

}  // namespace

std::vector<BenchRecord> run_horizon_study(int masses, const std::vector<int>& horizons,
                                           const BenchOptions& options) {
  return run_study("horizon", {masses}, horizons, options);
}

std::vector<BenchRecord> run_states_study(int horizon, const std::vector<int>& mass_counts,
                                          const BenchOptions& options) {
  return run_study("states", mass_counts, {horizon}, options);
}

std::optional<double> fit_loglog_slope(const std::vector<double>& x,
                                       const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) return std::nullopt;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    if (x[i] <= 0.0 || y[i] <= 0.0) return std::nullopt;
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double denom = n * sxx - sx * sx;
  if (std::abs(denom) < 1e-12) return std::nullopt;
  return (n * sxy - sx * sy) / denom;
}

void collect_medians(const std::vector<BenchRecord>& records, const std::string& mode,
                     const std::string& field, std::vector<double>& grid_out,
                     std::vector<double>& time_out) {
  std::map<int, std::vector<double>> by_point;
  for (const auto& r : records) {
    if (r.mode != mode || r.status != "converged") continue;
    const int grid_value = mode == "horizon" ? r.horizon : r.nx;
    double t = r.total_time_s;
    if (field == "qp") t = r.qp_time_s;
    if (field == "riccati") t = r.riccati_time_s;
    by_point[grid_value].push_back(t);
  }
  grid_out.clear();
  time_out.clear();
  for (auto& [value, times] : by_point) {
    std::sort(times.begin(), times.end());
    grid_out.push_back(static_cast<double>(value));
    time_out.push_back(times[times.size() / 2]);
  }
}

FeasibleInitialStateSampler::FeasibleInitialStateSampler(const RobustOcp& ocp, std::uint64_t seed,
                                                         const SolverConfig& config)
    : ocp_(ocp), config_(config), rng_(seed) {
  const int nx = ocp.system.nx;
  lower_ = Eigen::VectorXd::Constant(nx, -1.0);
  upper_ = Eigen::VectorXd::Constant(nx, 1.0);

  // box bounds from single-coordinate stage-0 state rows
  const Eigen::MatrixXd& g = ocp.constraints.G[0];
  for (int r = 0; r < g.rows(); ++r) {
    if (g.row(r).tail(ocp.system.nu).lpNorm<Eigen::Infinity>() > 1e-14) continue;
    int nonzero = -1;
    bool single = true;
    for (int i = 0; i < nx; ++i) {
      if (std::abs(g(r, i)) > 1e-14) {
        if (nonzero >= 0) single = false;
        nonzero = i;
      }
    }
    if (!single || nonzero < 0) continue;
    const double coeff = g(r, nonzero);
    const double bound = -ocp.constraints.b[0](r) / coeff;
    if (coeff > 0) {
      upper_(nonzero) = bound;
    } else {
      lower_(nonzero) = bound;
    }
  }

  // reference tightening from a converged origin solve, inflated by 10% so
  // accepted draws stay solvable at their own converged tightening
  SolverConfig probe_config = config_;
  probe_config.record_iterates = false;
  const SlsSolution reference = solve(ocp_, Eigen::VectorXd::Zero(nx), probe_config);
  if (reference.status == SolveStatus::Converged) {
    probe_hct_ = compute_hct(reference.tightening, config_.eps_beta);
    for (auto& h : probe_hct_) h *= 1.1;
  } else {
    probe_hct_.assign(ocp.system.horizon + 1,
                      Eigen::VectorXd::Zero(ocp.constraints.stage_rows()));
    probe_hct_.back() = Eigen::VectorXd::Zero(ocp.constraints.terminal_rows());
  }
}

Eigen::VectorXd FeasibleInitialStateSampler::draw() {
  const int nx = ocp_.system.nx;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  constexpr long kMaxDraws = 1000000;
  for (long draws = 0; draws < kMaxDraws; ++draws) {
    Eigen::VectorXd x0(nx);
    for (int i = 0; i < nx; ++i) {
      x0(i) = lower_(i) + (upper_(i) - lower_(i)) * unit(rng_);
    }
    QpSettings probe = config_.qp;
    probe.warm_start.reset();
    const NominalSolution probe_sol = solve_nominal(ocp_, x0, probe_hct_, probe);
    if (probe_sol.status == QpStatus::Solved) return x0;
  }
  throw std::runtime_error("feasible-x0 sampling exhausted: acceptance rate below 0.1%");
}

std::vector<IterationTrial> run_iteration_study(const RobustOcp& ocp, int n_trials,
                                                std::uint64_t seed, const SolverConfig& config) {
  if (n_trials < 1) throw std::invalid_argument("run_iteration_study: n_trials must be >= 1");
  FeasibleInitialStateSampler sampler(ocp, seed, config);
  SolverConfig cfg = config;
  cfg.record_iterates = false;

  std::vector<IterationTrial> trials;
  trials.reserve(n_trials);
  for (int t = 0; t < n_trials; ++t) {
    IterationTrial trial;
    trial.trial = t;
    trial.x0 = sampler.draw();
    const SlsSolution sol = solve(ocp, trial.x0, cfg);
    trial.iterations = sol.iterations;
    trial.status = status_name(sol.status);
    trials.push_back(std::move(trial));
  }
  return trials;
}

}  // namespace fastsls
