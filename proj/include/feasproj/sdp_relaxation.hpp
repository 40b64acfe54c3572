#pragma once

#include <optional>

#include "feasproj/pop.hpp"
#include "feasproj/sdp_solver.hpp"

namespace feasproj {

class NotSolved : public std::runtime_error {
 public:
  NotSolved() : std::runtime_error("SDP solution not usable for extraction") {}
};

// Order-1 relaxation: xx^T replaced by W >= 0; generation and flows
// eliminated by substituting their defining traces; thermal limits as 3x3
// arrow LMIs; quadratic costs as 2x2 Schur epigraph blocks against the
// alpha variables.
struct RelaxationModel {
  SdpProblem sdp;
  Index n_bus = 0;
  int w_block = -1;
  // The slack bus's imaginary coordinate is eliminated from W (voltage-angle
  // gauge); its row/column would otherwise carry a free rotation orbit that
  // spoils rank-1 extraction.
  Index gauge_drop = -1;
  int alpha_block = -1;  // -1 when the objective is the slack norm
  int slack_block = -1;
  int aux_block = -1;   // row slacks for scalar inequalities
  int t_block = -1;     // linf bound variable / l2 per-slack epigraphs
  std::vector<int> flow_blocks;  // aligned with rated oriented branches
  std::vector<int> cost_blocks;  // aligned with generator aggregates
  std::vector<std::string> slack_names;
  std::vector<double> a_k, b_k;  // per-generator epigraph constants
  bool slacked = false;
  bool cost_objective = false;
  NormKind norm = NormKind::l1;
  std::optional<double> budget;
};

// budget present iff building the Stage-2 variant; unslacked builds the
// plain relaxation of the cost objective.
RelaxationModel build_relaxation(const CaseData& cd, const FlowMatrices& fm, bool slacked,
                                 NormKind norm, std::optional<double> budget);

// Norm value of the slack segment encoded in the SDP objective/dual value.
double relaxation_norm_value(const RelaxationModel& model, double objective_value);

Vector relaxation_slacks(const RelaxationModel& model, const SdpSolution& sol);

struct RelaxationCandidate {
  Vector x;          // voltage vector, rotated to the slack-bus gauge
  double rank1_gap;  // lambda2 / lambda1 of W
  Vector chi;        // full point in the unslacked layout
};

RelaxationCandidate extract_candidate(const RelaxationModel& model, const SdpSolution& sol,
                                      const CaseData& cd, const FlowMatrices& fm,
                                      const PopProblem& unslacked);

}  // namespace feasproj
