#include "fastsls/model.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

namespace fastsls {

std::string ValidationError::describe(ValidationIssue issue, const std::string& location) {
  switch (issue) {
    case ValidationIssue::DimensionMismatch:
      return "dimension mismatch at " + location;
    case ValidationIssue::NotPositiveDefinite:
      return "matrix not positive definite: " + location;
    case ValidationIssue::RankDeficientE:
      return "disturbance matrix rank deficient at stage " + location;
  }
  return "invalid problem: " + location;
}

namespace {

void require(bool ok, ValidationIssue issue, const std::string& location) {
  if (!ok) throw ValidationError(issue, location);
}

void check_spd(const Eigen::MatrixXd& m, int dim, const std::string& name) {
  require(m.rows() == dim && m.cols() == dim, ValidationIssue::DimensionMismatch, name);
  require(m.isApprox(m.transpose(), 1e-12), ValidationIssue::NotPositiveDefinite, name);
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  require(llt.info() == Eigen::Success, ValidationIssue::NotPositiveDefinite, name);
}

}  // namespace

void validate(const RobustOcp& ocp) {
  const LtvSystem& sys = ocp.system;
  const int N = sys.horizon;
  require(N >= 1, ValidationIssue::DimensionMismatch, "horizon");
  require(sys.nx >= 1 && sys.nu >= 1 && sys.nw >= 1, ValidationIssue::DimensionMismatch,
          "state/input/disturbance dimensions");
  require(sys.nw <= sys.nx, ValidationIssue::DimensionMismatch, "nw > nx");
  require(static_cast<int>(sys.A.size()) == N, ValidationIssue::DimensionMismatch, "A count");
  require(static_cast<int>(sys.B.size()) == N, ValidationIssue::DimensionMismatch, "B count");
  require(static_cast<int>(sys.E.size()) == N, ValidationIssue::DimensionMismatch, "E count");

  for (int k = 0; k < N; ++k) {
    const std::string at = "[" + std::to_string(k) + "]";
    require(sys.A[k].rows() == sys.nx && sys.A[k].cols() == sys.nx,
            ValidationIssue::DimensionMismatch, "A" + at);
    require(sys.B[k].rows() == sys.nx && sys.B[k].cols() == sys.nu,
            ValidationIssue::DimensionMismatch, "B" + at);
    require(sys.E[k].rows() == sys.nx && sys.E[k].cols() == sys.nw,
            ValidationIssue::DimensionMismatch, "E" + at);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sys.E[k]);
    require(qr.rank() == sys.nw, ValidationIssue::RankDeficientE, std::to_string(k));
  }

  const ConstraintSet& con = ocp.constraints;
  require(static_cast<int>(con.G.size()) == N, ValidationIssue::DimensionMismatch, "G count");
  require(static_cast<int>(con.b.size()) == N, ValidationIssue::DimensionMismatch, "b count");
  const int nc = con.stage_rows();
  for (int k = 0; k < N; ++k) {
    const std::string at = "[" + std::to_string(k) + "]";
    require(con.G[k].rows() == nc && con.G[k].cols() == sys.nx + sys.nu,
            ValidationIssue::DimensionMismatch, "G" + at);
    require(con.b[k].size() == nc, ValidationIssue::DimensionMismatch, "b" + at);
  }
  require(con.Gf.cols() == sys.nx, ValidationIssue::DimensionMismatch, "Gf");
  require(con.bf.size() == con.Gf.rows(), ValidationIssue::DimensionMismatch, "bf");

  const CostWeights& w = ocp.weights;
  check_spd(w.Q, sys.nx, "Q");
  check_spd(w.P, sys.nx, "P");
  check_spd(w.R, sys.nu, "R");
  check_spd(w.Qbar, sys.nx, "Qbar");
  check_spd(w.Pbar, sys.nx, "Pbar");
  check_spd(w.Rbar, sys.nu, "Rbar");
}

RobustOcp mass_spring_damper_chain(int masses, int horizon, double dt, double mass,
                                   double spring, double damper) {
  if (masses < 1) throw std::invalid_argument("mass_spring_damper_chain: masses must be >= 1");
  if (horizon < 1) throw std::invalid_argument("mass_spring_damper_chain: horizon must be >= 1");
  if (dt <= 0.0) throw std::invalid_argument("mass_spring_damper_chain: dt must be > 0");
  if (mass <= 0.0) throw std::invalid_argument("mass_spring_damper_chain: mass must be > 0");

  const int L = masses;
  const int nx = 2 * L;
  const int nu = L;

  // Chain topology: wall -- m1 -- m2 -- ... -- mL (free end). Each link is a
  // spring/damper pair, so the coupling matrix is tridiag(1, -2, 1) with the
  // free-end diagonal entry -1.
  Eigen::MatrixXd coupling = Eigen::MatrixXd::Zero(L, L);
  for (int i = 0; i < L; ++i) {
    coupling(i, i) = (i == L - 1) ? -1.0 : -2.0;
    if (i > 0) coupling(i, i - 1) = 1.0;
    if (i + 1 < L) coupling(i, i + 1) = 1.0;
  }
  if (L == 1) coupling(0, 0) = -1.0;

  Eigen::MatrixXd a_cont = Eigen::MatrixXd::Zero(nx, nx);
  a_cont.topRightCorner(L, L).setIdentity();
  a_cont.bottomLeftCorner(L, L) = (spring / mass) * coupling;
  a_cont.bottomRightCorner(L, L) = (damper / mass) * coupling;

  Eigen::MatrixXd b_cont = Eigen::MatrixXd::Zero(nx, nu);
  b_cont.bottomRows(L) = (1.0 / mass) * Eigen::MatrixXd::Identity(L, L);

  const Eigen::MatrixXd a_disc = Eigen::MatrixXd::Identity(nx, nx) + dt * a_cont;
  const Eigen::MatrixXd b_disc = dt * b_cont;
  const Eigen::MatrixXd e_disc = 0.1 * Eigen::MatrixXd::Identity(nx, nx);

  RobustOcp ocp;
  ocp.system.horizon = horizon;
  ocp.system.nx = nx;
  ocp.system.nu = nu;
  ocp.system.nw = nx;
  ocp.system.A.assign(horizon, a_disc);
  ocp.system.B.assign(horizon, b_disc);
  ocp.system.E.assign(horizon, e_disc);

  const double bound = 4.0;
  const int nc = 2 * (nx + nu);
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(nc, nx + nu);
  for (int i = 0; i < nx + nu; ++i) {
    g(2 * i, i) = 1.0;
    g(2 * i + 1, i) = -1.0;
  }
  Eigen::MatrixXd gf = Eigen::MatrixXd::Zero(2 * nx, nx);
  for (int i = 0; i < nx; ++i) {
    gf(2 * i, i) = 1.0;
    gf(2 * i + 1, i) = -1.0;
  }

  ocp.constraints.G.assign(horizon, g);
  ocp.constraints.b.assign(horizon, Eigen::VectorXd::Constant(nc, -bound));
  ocp.constraints.Gf = gf;
  ocp.constraints.bf = Eigen::VectorXd::Constant(2 * nx, -bound);

  ocp.weights.Q = 3.0 * Eigen::MatrixXd::Identity(nx, nx);
  ocp.weights.P = ocp.weights.Q;
  ocp.weights.R = Eigen::MatrixXd::Identity(nu, nu);
  ocp.weights.Qbar = ocp.weights.Q;
  ocp.weights.Pbar = ocp.weights.P;
  ocp.weights.Rbar = ocp.weights.R;

  return ocp;
}

}  // namespace fastsls
