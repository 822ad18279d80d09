#include "fastsls/qp.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>

namespace fastsls {

Eigen::VectorXd NominalSolution::stacked_primal() const {
  const int N = static_cast<int>(v.size());
  const int nx = z.empty() ? 0 : static_cast<int>(z.front().size());
  const int nv = v.empty() ? 0 : static_cast<int>(v.front().size());
  Eigen::VectorXd y((N + 1) * nx + N * nv);
  for (int k = 0; k <= N; ++k) y.segment(k * nx, nx) = z[k];
  for (int k = 0; k < N; ++k) y.segment((N + 1) * nx + k * nv, nv) = v[k];
  return y;
}

namespace {

constexpr double kFractionToBoundary = 0.995;
constexpr double kDualBlowup = 1e10;
constexpr int kStallWindow = 10;

struct IpmWorkspace {
  const TrajectoryQp& qp;
  int N, nx, nv;
  std::vector<int> m;  // inequality rows per stage, index 0..N
  long m_total = 0;

  // iterate
  std::vector<Eigen::VectorXd> z, v, lambda, mu, s;

  // residuals
  std::vector<Eigen::VectorXd> r_stat_z, r_stat_v, r_dyn, r_ineq;

  // factorization
  std::vector<Eigen::MatrixXd> p_mat, gain;
  std::vector<Eigen::LLT<Eigen::MatrixXd>> f_llt;
  std::vector<Eigen::MatrixXd> l_mat;

  // directions
  std::vector<Eigen::VectorXd> dz, dv, dlambda, dmu, ds;

  explicit IpmWorkspace(const TrajectoryQp& problem)
      : qp(problem), N(problem.horizon), nx(problem.nx), nv(problem.nv) {
    m.resize(N + 1);
    for (int k = 0; k < N; ++k) {
      m[k] = static_cast<int>(qp.C[k].rows());
      m_total += m[k];
    }
    m[N] = static_cast<int>(qp.Cf.rows());
    m_total += m[N];

    z.assign(N + 1, Eigen::VectorXd::Zero(nx));
    v.assign(N, Eigen::VectorXd::Zero(nv));
    lambda.assign(N, Eigen::VectorXd::Zero(nx));
    mu.resize(N + 1);
    s.resize(N + 1);
    for (int k = 0; k <= N; ++k) {
      mu[k] = Eigen::VectorXd::Zero(m[k]);
      s[k] = Eigen::VectorXd::Zero(m[k]);
    }
    r_stat_z.assign(N + 1, Eigen::VectorXd::Zero(nx));
    r_stat_v.assign(N, Eigen::VectorXd::Zero(nv));
    r_dyn.assign(N, Eigen::VectorXd::Zero(nx));
    r_ineq = mu;
    p_mat.assign(N + 1, Eigen::MatrixXd::Zero(nx, nx));
    gain.assign(N, Eigen::MatrixXd::Zero(nv, nx));
    f_llt.resize(N);
    l_mat.assign(N, Eigen::MatrixXd::Zero(nv, nx));
    dz = z;
    dv = v;
    dlambda = lambda;
    dmu = mu;
    ds = s;
  }

  Eigen::VectorXd qz(int k) const {
    if (k == N) return qp.qzN.size() ? qp.qzN : Eigen::VectorXd::Zero(nx);
    return qp.qz.empty() ? Eigen::VectorXd::Zero(nx) : qp.qz[k];
  }
  Eigen::VectorXd qv(int k) const {
    return qp.qv.empty() ? Eigen::VectorXd::Zero(nv) : qp.qv[k];
  }
  Eigen::VectorXd dyn_offset(int k) const {
    return qp.c.empty() ? Eigen::VectorXd::Zero(nx) : qp.c[k];
  }

  Eigen::VectorXd ineq_value(int k) const {
    if (k == N) return qp.Cf * z[N] + qp.df;
    Eigen::VectorXd val = qp.C[k].leftCols(nx) * z[k] + qp.C[k].rightCols(nv) * v[k] + qp.d[k];
    return val;
  }

  void compute_residuals() {
    for (int k = 0; k < N; ++k) {
      r_dyn[k] = z[k + 1] - qp.A[k] * z[k] - qp.B[k] * v[k] - dyn_offset(k);
      r_ineq[k] = ineq_value(k) + s[k];
      r_stat_v[k] = qp.Hv[k] * v[k] + qv(k) - qp.B[k].transpose() * lambda[k] +
                    qp.C[k].rightCols(nv).transpose() * mu[k];
    }
    r_ineq[N] = ineq_value(N) + s[N];
    for (int k = 1; k < N; ++k) {
      r_stat_z[k] = qp.Hz[k] * z[k] + qz(k) + lambda[k - 1] - qp.A[k].transpose() * lambda[k] +
                    qp.C[k].leftCols(nx).transpose() * mu[k];
    }
    r_stat_z[N] = qp.HzN * z[N] + qz(N) + lambda[N - 1] + qp.Cf.transpose() * mu[N];
    // z_0 is pinned to x0, so no stationarity row for it.
    r_stat_z[0].setZero();
  }

  double stationarity_norm() const {
    double val = 0.0;
    for (int k = 1; k <= N; ++k) val = std::max(val, r_stat_z[k].lpNorm<Eigen::Infinity>());
    for (int k = 0; k < N; ++k) val = std::max(val, r_stat_v[k].lpNorm<Eigen::Infinity>());
    return val;
  }
  double equality_norm() const {
    double val = 0.0;
    for (int k = 0; k < N; ++k) val = std::max(val, r_dyn[k].lpNorm<Eigen::Infinity>());
    return val;
  }
  double inequality_norm() const {
    double val = 0.0;
    for (int k = 0; k <= N; ++k) {
      if (m[k] > 0) val = std::max(val, r_ineq[k].lpNorm<Eigen::Infinity>());
    }
    return val;
  }
  double primal_violation() const {
    double val = equality_norm();
    for (int k = 0; k <= N; ++k) {
      if (m[k] > 0) val = std::max(val, ineq_value(k).maxCoeff());
    }
    return val;
  }
  double complementarity() const {
    if (m_total == 0) return 0.0;
    double total = 0.0;
    for (int k = 0; k <= N; ++k) total += s[k].dot(mu[k]);
    return total / static_cast<double>(m_total);
  }
  double dual_inf_norm() const {
    double val = 0.0;
    for (int k = 0; k <= N; ++k) {
      if (m[k] > 0) val = std::max(val, mu[k].lpNorm<Eigen::Infinity>());
    }
    return val;
  }

  /// Backward matrix pass with barrier weights w = mu/s folded into the
  /// stage Hessians. With `barrier` false the plain Hessians are used.
  bool factorize(bool barrier) {
    auto weighted = [&](int k, Eigen::MatrixXd& hz, Eigen::MatrixXd& hv, Eigen::MatrixXd& hvz) {
      hz = (k == N) ? qp.HzN : qp.Hz[k];
      if (k < N) {
        hv = qp.Hv[k];
        hvz.setZero(nv, nx);
      }
      if (!barrier || m[k] == 0) return;
      const Eigen::VectorXd w = mu[k].cwiseQuotient(s[k]);
      if (k == N) {
        hz.noalias() += qp.Cf.transpose() * w.asDiagonal() * qp.Cf;
      } else {
        const auto cz = qp.C[k].leftCols(nx);
        const auto cv = qp.C[k].rightCols(nv);
        hz.noalias() += cz.transpose() * w.asDiagonal() * cz;
        hv.noalias() += cv.transpose() * w.asDiagonal() * cv;
        hvz.noalias() += cv.transpose() * w.asDiagonal() * cz;
      }
    };

    Eigen::MatrixXd hz, hv, hvz;
    weighted(N, hz, hv, hvz);
    p_mat[N] = 0.5 * (hz + hz.transpose());
    for (int k = N - 1; k >= 0; --k) {
      weighted(k, hz, hv, hvz);
      const Eigen::MatrixXd& a = qp.A[k];
      const Eigen::MatrixXd& b = qp.B[k];
      const Eigen::MatrixXd pb = p_mat[k + 1] * b;
      Eigen::MatrixXd f = hv + b.transpose() * pb;
      f_llt[k].compute(f);
      if (f_llt[k].info() != Eigen::Success) {
        f += 1e-11 * f.norm() * Eigen::MatrixXd::Identity(nv, nv);
        f_llt[k].compute(f);
        if (f_llt[k].info() != Eigen::Success) return false;
      }
      l_mat[k] = hvz + pb.transpose() * a;
      gain[k] = -f_llt[k].solve(l_mat[k]);
      Eigen::MatrixXd p = hz + a.transpose() * p_mat[k + 1] * a + l_mat[k].transpose() * gain[k];
      p_mat[k] = 0.5 * (p + p.transpose());
    }
    return true;
  }

  /// Vector backward/forward pass solving the Newton system for the given
  /// complementarity targets; fills dz, dv, dlambda, ds, dmu.
  void solve_step(const std::vector<Eigen::VectorXd>& r_comp, bool barrier) {
    std::vector<Eigen::VectorXd> u(N + 1);
    for (int k = 0; k <= N; ++k) {
      if (m[k] == 0) {
        u[k].resize(0);
        continue;
      }
      if (barrier) {
        u[k] = (mu[k].cwiseProduct(r_ineq[k]) - r_comp[k]).cwiseQuotient(s[k]);
      } else {
        u[k] = Eigen::VectorXd::Zero(m[k]);
      }
    }

    std::vector<Eigen::VectorXd> p_vec(N + 1), ff(N);
    auto grad_z = [&](int k) {
      Eigen::VectorXd g = r_stat_z[k];
      if (m[k] > 0) {
        if (k == N) {
          g.noalias() += qp.Cf.transpose() * u[k];
        } else {
          g.noalias() += qp.C[k].leftCols(nx).transpose() * u[k];
        }
      }
      return g;
    };
    auto grad_v = [&](int k) {
      Eigen::VectorXd g = r_stat_v[k];
      if (m[k] > 0) g.noalias() += qp.C[k].rightCols(nv).transpose() * u[k];
      return g;
    };

    p_vec[N] = grad_z(N);
    for (int k = N - 1; k >= 0; --k) {
      const Eigen::VectorXd t = p_vec[k + 1] - p_mat[k + 1] * r_dyn[k];
      const Eigen::VectorXd mvec = grad_v(k) + qp.B[k].transpose() * t;
      ff[k] = -f_llt[k].solve(mvec);
      p_vec[k] = grad_z(k) + qp.A[k].transpose() * t + l_mat[k].transpose() * ff[k];
    }

    dz[0].setZero();  // z_0 stays pinned to x0
    for (int k = 0; k < N; ++k) {
      dv[k] = gain[k] * dz[k] + ff[k];
      dz[k + 1] = qp.A[k] * dz[k] + qp.B[k] * dv[k] - r_dyn[k];
      dlambda[k] = p_mat[k + 1] * dz[k + 1] + p_vec[k + 1];
    }
    if (!barrier) return;
    for (int k = 0; k <= N; ++k) {
      if (m[k] == 0) continue;
      Eigen::VectorXd cdx;
      if (k == N) {
        cdx = qp.Cf * dz[N];
      } else {
        cdx = qp.C[k].leftCols(nx) * dz[k] + qp.C[k].rightCols(nv) * dv[k];
      }
      ds[k] = -r_ineq[k] - cdx;
      dmu[k] = (mu[k].cwiseProduct(cdx + r_ineq[k]) - r_comp[k]).cwiseQuotient(s[k]);
    }
  }

  double max_step(const std::vector<Eigen::VectorXd>& val,
                  const std::vector<Eigen::VectorXd>& dir, double gamma) const {
    double alpha = 1.0;
    for (int k = 0; k <= N; ++k) {
      for (int i = 0; i < m[k]; ++i) {
        if (dir[k](i) < 0.0) alpha = std::min(alpha, -gamma * val[k](i) / dir[k](i));
      }
    }
    return alpha;
  }

  double objective() const {
    double val = 0.0;
    for (int k = 0; k < N; ++k) {
      val += 0.5 * z[k].dot(qp.Hz[k] * z[k]) + qz(k).dot(z[k]);
      val += 0.5 * v[k].dot(qp.Hv[k] * v[k]) + qv(k).dot(v[k]);
    }
    val += 0.5 * z[N].dot(qp.HzN * z[N]) + qz(N).dot(z[N]);
    return val;
  }
};

/// Stage-0 rows acting only on the pinned initial state are decidable
/// up-front: if such a row is violated at x0 the QP cannot be feasible.
bool stage0_certainly_infeasible(const TrajectoryQp& qp, const Eigen::VectorXd& x0) {
  if (qp.C.empty() || qp.C[0].rows() == 0) return false;
  const int nx = qp.nx;
  const int nv = qp.nv;
  for (int i = 0; i < qp.C[0].rows(); ++i) {
    if (qp.C[0].row(i).tail(nv).lpNorm<Eigen::Infinity>() > 1e-14) continue;
    const double value = qp.C[0].row(i).head(nx).dot(x0) + qp.d[0](i);
    if (value > 1e-10 * std::max(1.0, x0.lpNorm<Eigen::Infinity>())) return true;
  }
  return false;
}

NominalSolution extract(const IpmWorkspace& w, QpStatus status, int iterations) {
  NominalSolution out;
  out.z = w.z;
  out.v = w.v;
  out.lambda = w.lambda;
  out.mu = w.mu;
  out.status = status;
  out.iterations = iterations;
  out.objective = w.objective();
  out.stationarity_residual = w.stationarity_norm();
  out.equality_residual = w.equality_norm();
  out.inequality_residual = w.inequality_norm();
  out.complementarity = w.complementarity();
  return out;
}

}  // namespace

NominalSolution solve_trajectory_qp(const TrajectoryQp& qp, const Eigen::VectorXd& x0,
                                    const QpSettings& settings) {
  IpmWorkspace w(qp);
  const int N = w.N;

  if (stage0_certainly_infeasible(qp, x0)) {
    w.z[0] = x0;
    return extract(w, QpStatus::Infeasible, 0);
  }

  // Primal/dual initialization: equality-constrained Newton solve for (z, v,
  // lambda), then slacks from the actual constraint values.
  w.z[0] = x0;
  const auto warm_start_usable = [&]() {
    if (!settings.warm_start) return false;
    const NominalSolution& ws = *settings.warm_start;
    if (static_cast<int>(ws.z.size()) != N + 1 || static_cast<int>(ws.v.size()) != N ||
        static_cast<int>(ws.lambda.size()) != N || static_cast<int>(ws.mu.size()) != N + 1) {
      return false;
    }
    if (ws.v.front().size() != w.nv || ws.z.front().size() != w.nx) return false;
    for (int k = 0; k <= N; ++k) {
      if (ws.mu[k].size() != w.m[k]) return false;
    }
    return true;
  };
  if (warm_start_usable()) {
    const NominalSolution& ws = *settings.warm_start;
    for (int k = 1; k <= N; ++k) w.z[k] = ws.z[k];
    for (int k = 0; k < N; ++k) w.v[k] = ws.v[k];
    for (int k = 0; k < N; ++k) w.lambda[k] = ws.lambda[k];
    for (int k = 0; k <= N; ++k) {
      if (w.m[k] == 0) continue;
      w.mu[k] = ws.mu[k].cwiseMax(1e-6);
      w.s[k] = (-w.ineq_value(k)).cwiseMax(1e-6);
    }
  } else {
    w.compute_residuals();
    if (!w.factorize(false)) return extract(w, QpStatus::MaxIterations, 0);
    std::vector<Eigen::VectorXd> zero_comp(N + 1);
    w.solve_step(zero_comp, false);
    for (int k = 0; k < N; ++k) {
      w.v[k] += w.dv[k];
      w.z[k + 1] += w.dz[k + 1];
      w.lambda[k] += w.dlambda[k];
    }
    for (int k = 0; k <= N; ++k) {
      if (w.m[k] == 0) continue;
      w.s[k] = (-w.ineq_value(k)).cwiseMax(1.0);
      w.mu[k] = w.s[k].cwiseInverse().cwiseMin(1.0).cwiseMax(1e-2);
    }
  }

  if (w.m_total == 0) {
    w.compute_residuals();
    return extract(w, QpStatus::Solved, 1);
  }

  double best_violation = std::numeric_limits<double>::infinity();
  int stall_count = 0;

  std::vector<Eigen::VectorXd> r_comp(N + 1), s_aff(N + 1), mu_aff(N + 1);
  for (int iter = 1; iter <= settings.max_iterations; ++iter) {
    w.compute_residuals();

    const double stat = w.stationarity_norm();
    const double eq = w.equality_norm();
    const double ineq = w.inequality_norm();
    const double comp = w.complementarity();
    if (stat <= settings.feasibility_tol && std::max(eq, ineq) <= settings.feasibility_tol &&
        comp <= settings.complementarity_tol) {
      return extract(w, QpStatus::Solved, iter - 1);
    }

    // stalled primal infeasibility over several iterations: declare infeasible
    const double violation = w.primal_violation();
    if (violation < best_violation * (1.0 - 1e-2)) {
      best_violation = std::min(best_violation, violation);
      stall_count = 0;
    } else {
      ++stall_count;
    }
    const bool primal_stuck = violation > 1e3 * settings.feasibility_tol;
    if (primal_stuck && (stall_count >= kStallWindow || w.dual_inf_norm() > kDualBlowup)) {
      return extract(w, QpStatus::Infeasible, iter - 1);
    }

    if (!w.factorize(true)) return extract(w, QpStatus::MaxIterations, iter - 1);

    // predictor (affine scaling) direction
    for (int k = 0; k <= N; ++k) r_comp[k] = w.s[k].cwiseProduct(w.mu[k]);
    w.solve_step(r_comp, true);

    const double alpha_aff =
        std::min(w.max_step(w.s, w.ds, 1.0), w.max_step(w.mu, w.dmu, 1.0));
    double comp_aff = 0.0;
    for (int k = 0; k <= N; ++k) {
      comp_aff += (w.s[k] + alpha_aff * w.ds[k]).dot(w.mu[k] + alpha_aff * w.dmu[k]);
    }
    comp_aff /= static_cast<double>(w.m_total);
    const double sigma = std::pow(std::min(1.0, std::max(0.0, comp_aff / comp)), 3);

    // corrector
    for (int k = 0; k <= N; ++k) {
      s_aff[k] = w.ds[k];
      mu_aff[k] = w.dmu[k];
      r_comp[k] = w.s[k].cwiseProduct(w.mu[k]) + s_aff[k].cwiseProduct(mu_aff[k]) -
                  Eigen::VectorXd::Constant(w.m[k], sigma * comp);
    }
    w.solve_step(r_comp, true);

    const double alpha = std::min(w.max_step(w.s, w.ds, kFractionToBoundary),
                                  w.max_step(w.mu, w.dmu, kFractionToBoundary));
    for (int k = 0; k < N; ++k) {
      w.v[k] += alpha * w.dv[k];
      w.z[k + 1] += alpha * w.dz[k + 1];
      w.lambda[k] += alpha * w.dlambda[k];
    }
    for (int k = 0; k <= N; ++k) {
      if (w.m[k] == 0) continue;
      w.s[k] += alpha * w.ds[k];
      w.mu[k] += alpha * w.dmu[k];
    }
  }

  w.compute_residuals();
  return extract(w, QpStatus::MaxIterations, settings.max_iterations);
}

NominalSolution solve_nominal(const RobustOcp& ocp, const Eigen::VectorXd& x0,
                              const std::vector<Eigen::VectorXd>& hct,
                              const QpSettings& settings) {
  const LtvSystem& sys = ocp.system;
  const int N = sys.horizon;
  if (static_cast<int>(hct.size()) != N + 1) {
    throw std::invalid_argument("solve_nominal: hct must have N+1 entries");
  }
  if (x0.size() != sys.nx) throw std::invalid_argument("solve_nominal: x0 dimension");

  TrajectoryQp qp;
  qp.horizon = N;
  qp.nx = sys.nx;
  qp.nv = sys.nu;
  qp.A = sys.A;
  qp.B = sys.B;
  qp.Hz.assign(N, 2.0 * ocp.weights.Q);
  qp.Hv.assign(N, 2.0 * ocp.weights.R);
  qp.HzN = 2.0 * ocp.weights.P;
  qp.C = ocp.constraints.G;
  qp.d.resize(N);
  for (int k = 0; k < N; ++k) qp.d[k] = ocp.constraints.b[k] + hct[k];
  qp.Cf = ocp.constraints.Gf;
  qp.df = ocp.constraints.bf + hct[N];

  return solve_trajectory_qp(qp, x0, settings);
}

}  // namespace fastsls
