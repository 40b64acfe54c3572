#pragma once

#include <optional>
#include <string>
#include <vector>

#include "feasproj/case_data.hpp"
#include "feasproj/certify.hpp"
#include "feasproj/report.hpp"
#include "feasproj/sdp_relaxation.hpp"

namespace feasproj {

struct PipelineOptions {
  NormKind norm = NormKind::l1;
  Backend backend = Backend::nlp;
  Stage3Mode stage3 = Stage3Mode::power_flow;
  NlpOptions nlp;
  double sdp_tol = 1e-7;
  double feasibility_tol = 1e-6;
  double budget_slack = 0.0;  // relative inflation of the Stage-2 budget
  int newton_max_iter = 100;
  bool trace = false;
  std::string point_file_stem;  // when set, stage points are dumped to files
  std::string instance_label;   // overrides the derived instance name
};

struct PipelineResult {
  std::string instance;
  std::vector<StageReport> stages;
  std::optional<AlphaCertificate> certificate;
  bool declared_infeasible = false;  // LB1 strictly positive beyond tolerance
  bool stage_failure = false;
  int exit_code = 0;  // 0 repaired/feasible, 2 declared infeasible, 3 stage failure
};

PipelineResult run_pipeline(const CaseData& cd, const std::optional<Perturbation>& perturb,
                            const PipelineOptions& opts);

}  // namespace feasproj
