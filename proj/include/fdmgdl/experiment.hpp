#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "fdmgdl/config.hpp"
#include "fdmgdl/convex_cert.hpp"
#include "fdmgdl/metrics.hpp"

namespace fdmgdl {

struct GradeSummary {
  int grade = 0;
  int depth = 0;
  int epochs = 0;
  double adam_loss = 0.0;
  double final_loss = 0.0;
  double wall_seconds = 0.0;
  double ac_time = 0.0;
  double tr_rse = -1.0;  // negative when no exact solution exists
  double te_rse = -1.0;
  std::string polish_choice;
};

struct LossRow {
  int grade = 0;
  int epoch = 0;
  double loss = 0.0;
  double lr = 0.0;
  double elapsed = 0.0;
};

struct FieldRow {
  Point x{0.0, 0.0, 0.0};
  Complex value;
};

struct MethodSummary {
  std::string method;
  int epochs = 0;
  double final_loss = 0.0;
  double wall_seconds = 0.0;
  double tr_rse = -1.0;
  double te_rse = -1.0;
  int equivalent_depth = 0;
};

struct FdmSummary {
  std::string solver;
  double relative_residual = 0.0;
  bool converged = false;
  double tr_rse = 0.0;
  double te_rse_bilinear = 0.0;
  double te_rse_biquadratic = 0.0;
};

struct RunReport {
  std::map<std::string, std::string> config;
  std::string method;
  int dim = 2;
  std::vector<GradeSummary> grades;
  std::vector<MethodSummary> methods;  // one row per trained method
  std::optional<FdmSummary> fdm;
  std::optional<DualityReport> certificate;
  std::vector<LossRow> loss;
  std::vector<FieldRow> field;
  std::vector<FieldRow> residual;
  std::vector<std::vector<FieldRow>> grade_fields;  // pml snapshots after each grade
  double zero_residual_seminorm = -1.0;
  double final_residual_seminorm = -1.0;
  bool aborted = false;
  std::string error;
  double total_seconds = 0.0;
};

RunReport run_experiment(const ExperimentConfig& cfg);

nlohmann::json report_to_json(const RunReport& report, bool deterministic);
RunReport report_from_json(const nlohmann::json& j);

// report.json, loss.csv, field.csv and residual.csv (when available).
void write_outputs(const RunReport& report, const std::string& dir, bool deterministic);

}  // namespace fdmgdl
