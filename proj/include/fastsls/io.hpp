#pragma once

#include <nlohmann/json_fwd.hpp>

#include <string>

#include "fastsls/model.hpp"
#include "fastsls/solver.hpp"
#include "fastsls/verify.hpp"

namespace fastsls {

inline constexpr const char* kProblemSchemaVersion = "fast-sls-problem/1";
inline constexpr const char* kSolutionSchemaVersion = "fast-sls-solution/1";
inline constexpr const char* kReportSchemaVersion = "fast-sls-report/1";

nlohmann::json problem_to_json(const RobustOcp& ocp);
RobustOcp problem_from_json(const nlohmann::json& doc);

/// Serializes a solve result. Wall-clock phase timings are only embedded when
/// `include_timings` is set, keeping the default output reproducible
/// byte-for-byte across runs.
nlohmann::json solution_to_json(const SlsSolution& solution, bool include_timings = false);
SlsSolution solution_from_json(const nlohmann::json& doc);

nlohmann::json report_to_json(const VerificationReport& report);

void write_json_file(const std::string& path, const nlohmann::json& doc);
nlohmann::json read_json_file(const std::string& path);

}  // namespace fastsls
