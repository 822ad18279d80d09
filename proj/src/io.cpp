#include "fastsls/io.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <stdexcept>

namespace fastsls {

using nlohmann::json;

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
  json arr = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) arr.push_back(m(r, c));
  }
  return arr;
}

Eigen::MatrixXd matrix_from_json(const json& arr, Eigen::Index rows, Eigen::Index cols) {
  if (static_cast<Eigen::Index>(arr.size()) != rows * cols) {
    throw std::runtime_error("matrix entry count mismatch");
  }
  Eigen::MatrixXd m(rows, cols);
  Eigen::Index i = 0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = arr[i++].get<double>();
  }
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Eigen::VectorXd vector_from_json(const json& arr) {
  Eigen::VectorXd v(arr.size());
  for (size_t i = 0; i < arr.size(); ++i) v(static_cast<Eigen::Index>(i)) = arr[i].get<double>();
  return v;
}

json matrix_list_to_json(const std::vector<Eigen::MatrixXd>& list) {
  json arr = json::array();
  for (const auto& m : list) arr.push_back(matrix_to_json(m));
  return arr;
}

json vector_list_to_json(const std::vector<Eigen::VectorXd>& list) {
  json arr = json::array();
  for (const auto& v : list) arr.push_back(vector_to_json(v));
  return arr;
}

std::string status_name(SolveStatus status) {
  switch (status) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::MaxIterations: return "max-iterations";
    case SolveStatus::Infeasible: return "infeasible";
  }
  return "unknown";
}

SolveStatus status_from_name(const std::string& name) {
  if (name == "converged") return SolveStatus::Converged;
  if (name == "max-iterations") return SolveStatus::MaxIterations;
  if (name == "infeasible") return SolveStatus::Infeasible;
  throw std::runtime_error("unknown solution status: " + name);
}

std::string qp_status_name(QpStatus status) {
  switch (status) {
    case QpStatus::Solved: return "solved";
    case QpStatus::MaxIterations: return "max-iterations";
    case QpStatus::Infeasible: return "infeasible";
  }
  return "unknown";
}

QpStatus qp_status_from_name(const std::string& name) {
  if (name == "solved") return QpStatus::Solved;
  if (name == "max-iterations") return QpStatus::MaxIterations;
  if (name == "infeasible") return QpStatus::Infeasible;
  throw std::runtime_error("unknown QP status: " + name);
}

void check_version(const json& doc, const char* expected) {
  if (!doc.contains("version") || doc.at("version").get<std::string>() != expected) {
    throw std::runtime_error(std::string("expected document version ") + expected);
  }
}

}  // namespace

json problem_to_json(const RobustOcp& ocp) {
  const LtvSystem& sys = ocp.system;
  json doc;
  doc["version"] = kProblemSchemaVersion;
  doc["horizon"] = sys.horizon;
  doc["dims"] = {{"nx", sys.nx},
                 {"nu", sys.nu},
                 {"nw", sys.nw},
                 {"nc", ocp.constraints.stage_rows()},
                 {"nf", ocp.constraints.terminal_rows()}};
  doc["system"] = {{"A", matrix_list_to_json(sys.A)},
                   {"B", matrix_list_to_json(sys.B)},
                   {"E", matrix_list_to_json(sys.E)}};
  doc["constraints"] = {{"G", matrix_list_to_json(ocp.constraints.G)},
                        {"b", vector_list_to_json(ocp.constraints.b)},
                        {"Gf", matrix_to_json(ocp.constraints.Gf)},
                        {"bf", vector_to_json(ocp.constraints.bf)}};
  doc["weights"] = {{"Q", matrix_to_json(ocp.weights.Q)},
                    {"R", matrix_to_json(ocp.weights.R)},
                    {"P", matrix_to_json(ocp.weights.P)},
                    {"Qbar", matrix_to_json(ocp.weights.Qbar)},
                    {"Rbar", matrix_to_json(ocp.weights.Rbar)},
                    {"Pbar", matrix_to_json(ocp.weights.Pbar)}};
  return doc;
}

RobustOcp problem_from_json(const json& doc) {
  check_version(doc, kProblemSchemaVersion);
  RobustOcp ocp;
  LtvSystem& sys = ocp.system;
  sys.horizon = doc.at("horizon").get<int>();
  const json& dims = doc.at("dims");
  sys.nx = dims.at("nx").get<int>();
  sys.nu = dims.at("nu").get<int>();
  sys.nw = dims.at("nw").get<int>();
  const int nc = dims.at("nc").get<int>();
  const int nf = dims.at("nf").get<int>();

  const json& system = doc.at("system");
  for (const auto& m : system.at("A")) sys.A.push_back(matrix_from_json(m, sys.nx, sys.nx));
  for (const auto& m : system.at("B")) sys.B.push_back(matrix_from_json(m, sys.nx, sys.nu));
  for (const auto& m : system.at("E")) sys.E.push_back(matrix_from_json(m, sys.nx, sys.nw));

  const json& con = doc.at("constraints");
  for (const auto& m : con.at("G")) {
    ocp.constraints.G.push_back(matrix_from_json(m, nc, sys.nx + sys.nu));
  }
  for (const auto& v : con.at("b")) ocp.constraints.b.push_back(vector_from_json(v));
  ocp.constraints.Gf = matrix_from_json(con.at("Gf"), nf, sys.nx);
  ocp.constraints.bf = vector_from_json(con.at("bf"));

  const json& w = doc.at("weights");
  ocp.weights.Q = matrix_from_json(w.at("Q"), sys.nx, sys.nx);
  ocp.weights.R = matrix_from_json(w.at("R"), sys.nu, sys.nu);
  ocp.weights.P = matrix_from_json(w.at("P"), sys.nx, sys.nx);
  ocp.weights.Qbar = matrix_from_json(w.at("Qbar"), sys.nx, sys.nx);
  ocp.weights.Rbar = matrix_from_json(w.at("Rbar"), sys.nu, sys.nu);
  ocp.weights.Pbar = matrix_from_json(w.at("Pbar"), sys.nx, sys.nx);
  return ocp;
}

json solution_to_json(const SlsSolution& solution, bool include_timings) {
  const SystemResponse& resp = solution.response;
  json doc;
  doc["version"] = kSolutionSchemaVersion;
  doc["status"] = status_name(solution.status);
  doc["iterations"] = solution.iterations;
  if (solution.infeasible_at) doc["infeasible_at"] = *solution.infeasible_at;
  doc["dims"] = {{"horizon", resp.horizon}, {"nx", resp.nx},    {"nu", resp.nu},
                 {"nw", resp.nw},           {"nc", solution.tightening.nc},
                 {"nf", solution.tightening.nf}};
  doc["objective"] = solution.nominal.objective;

  json nominal;
  nominal["status"] = qp_status_name(solution.nominal.status);
  nominal["z"] = vector_list_to_json(solution.nominal.z);
  nominal["v"] = vector_list_to_json(solution.nominal.v);
  nominal["lambda"] = vector_list_to_json(solution.nominal.lambda);
  nominal["mu"] = vector_list_to_json(solution.nominal.mu);
  doc["nominal"] = std::move(nominal);

  doc["gains"] = {{"K", matrix_list_to_json(solution.gains.gains)}};
  doc["response"] = {{"phix", matrix_list_to_json(resp.phix)},
                     {"phiu", matrix_list_to_json(resp.phiu)}};
  doc["tightening"] = {{"eps_beta", solution.tightening.eps_beta},
                       {"stage", vector_list_to_json(solution.tightening.stage)},
                       {"terminal", vector_list_to_json(solution.tightening.terminal)}};
  doc["duals"] = {{"stage", vector_list_to_json(solution.duals.stage)},
                  {"terminal", vector_list_to_json(solution.duals.terminal)}};

  json telemetry;
  telemetry["outer_iterations"] = solution.iterations;
  json qp_iters = json::array();
  json riccati_steps = json::array();
  for (const auto& t : solution.telemetry) {
    qp_iters.push_back(t.qp_iterations);
    riccati_steps.push_back(t.riccati_steps);
  }
  telemetry["qp_iterations"] = std::move(qp_iters);
  telemetry["riccati_steps"] = std::move(riccati_steps);
  if (include_timings) {
    json timings = json::array();
    for (const auto& t : solution.telemetry) {
      timings.push_back({{"qp_ns", t.qp_ns},
                         {"dual_update_ns", t.dual_update_ns},
                         {"riccati_ns", t.riccati_ns},
                         {"tightening_ns", t.tightening_ns}});
    }
    telemetry["timings"] = std::move(timings);
  }
  doc["telemetry"] = std::move(telemetry);
  return doc;
}

SlsSolution solution_from_json(const json& doc) {
  check_version(doc, kSolutionSchemaVersion);
  SlsSolution solution;
  solution.status = status_from_name(doc.at("status").get<std::string>());
  solution.iterations = doc.at("iterations").get<int>();
  if (doc.contains("infeasible_at")) solution.infeasible_at = doc.at("infeasible_at").get<int>();

  const json& dims = doc.at("dims");
  const int N = dims.at("horizon").get<int>();
  const int nx = dims.at("nx").get<int>();
  const int nu = dims.at("nu").get<int>();
  const int nw = dims.at("nw").get<int>();
  const int nc = dims.at("nc").get<int>();
  const int nf = dims.at("nf").get<int>();

  const json& nominal = doc.at("nominal");
  solution.nominal.status = qp_status_from_name(nominal.at("status").get<std::string>());
  solution.nominal.objective = doc.at("objective").get<double>();
  for (const auto& v : nominal.at("z")) solution.nominal.z.push_back(vector_from_json(v));
  for (const auto& v : nominal.at("v")) solution.nominal.v.push_back(vector_from_json(v));
  for (const auto& v : nominal.at("lambda")) {
    solution.nominal.lambda.push_back(vector_from_json(v));
  }
  for (const auto& v : nominal.at("mu")) solution.nominal.mu.push_back(vector_from_json(v));

  solution.gains.horizon = N;
  solution.gains.nx = nx;
  solution.gains.nu = nu;
  const json& gains = doc.at("gains").at("K");
  for (int j = 0; j < N; ++j) {
    solution.gains.gains.push_back(matrix_from_json(gains.at(j), (N - 1 - j) * nu, nx));
  }

  solution.response.horizon = N;
  solution.response.nx = nx;
  solution.response.nu = nu;
  solution.response.nw = nw;
  const json& phix = doc.at("response").at("phix");
  const json& phiu = doc.at("response").at("phiu");
  for (int j = 0; j < N; ++j) {
    solution.response.phix.push_back(matrix_from_json(phix.at(j), (N - j) * nx, nw));
    solution.response.phiu.push_back(matrix_from_json(phiu.at(j), (N - 1 - j) * nu, nw));
  }

  const json& tightening = doc.at("tightening");
  solution.tightening.horizon = N;
  solution.tightening.nc = nc;
  solution.tightening.nf = nf;
  solution.tightening.eps_beta = tightening.at("eps_beta").get<double>();
  for (const auto& v : tightening.at("stage")) {
    solution.tightening.stage.push_back(vector_from_json(v));
  }
  for (const auto& v : tightening.at("terminal")) {
    solution.tightening.terminal.push_back(vector_from_json(v));
  }

  const json& duals = doc.at("duals");
  solution.duals.horizon = N;
  solution.duals.nc = nc;
  solution.duals.nf = nf;
  for (const auto& v : duals.at("stage")) solution.duals.stage.push_back(vector_from_json(v));
  for (const auto& v : duals.at("terminal")) {
    solution.duals.terminal.push_back(vector_from_json(v));
  }
  return solution;
}

json report_to_json(const VerificationReport& report) {
  json doc;
  doc["version"] = kReportSchemaVersion;
  doc["tolerance"] = report.tolerance;
  doc["max_cone_residual"] = report.max_cone_residual;
  doc["max_nominal_dyn_residual"] = report.max_nominal_dyn_residual;
  doc["max_propagation_residual"] = report.max_propagation_residual;
  doc["max_complementarity"] = report.max_complementarity;
  doc["robustness"] = {{"samples", report.samples},
                       {"violations", report.violations},
                       {"skipped", report.robustness_skipped}};
  doc["checks"] = {
      {"feasibility", report.feasibility_pass ? "pass" : "fail"},
      {"complementarity", report.complementarity_pass ? "pass" : "fail"},
      {"robustness",
       report.robustness_skipped ? "skipped" : (report.robustness_pass ? "pass" : "fail")}};
  return doc;
}

void write_json_file(const std::string& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << doc.dump(2) << "\n";
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  json doc;
  in >> doc;
  return doc;
}

}  // namespace fastsls
