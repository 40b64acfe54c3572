#pragma once

#include <stdexcept>
#include <vector>

#include "feasproj/pop.hpp"

namespace feasproj {

class NonFiniteEncountered : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NlpOptions {
  int max_outer_iterations = 200;
  int max_inner_iterations = 100;
  double feasibility_tol = 1e-6;
  double optimality_tol = 1e-6;
  double initial_penalty = 10.0;
  double penalty_growth = 10.0;
  double penalty_cap = 1e10;
  double multiplier_cap = 1e8;
  bool log_trace = false;
};

enum class NlpStatus { optimal_local, max_iterations, infeasible_local, numerical_failure };

const char* nlp_status_name(NlpStatus s);

struct NlpTracePoint {
  int outer = 0;
  double objective = 0;
  double violation = 0;
  double penalty = 0;
};

struct NlpResult {
  NlpStatus status = NlpStatus::numerical_failure;
  Vector point;
  double objective = 0;
  double max_violation = 0;
  double stationarity = 0;
  int iterations = 0;  // inner iterations over all outer rounds
  Vector multipliers;  // per constraint, signed against the original row
  std::vector<NlpTracePoint> trace;
};

// Augmented-Lagrangian local solver: equality multipliers, clipped penalty
// terms for inequalities, damped projected-Newton inner solves with Armijo
// line search. Deterministic for fixed inputs.
NlpResult solve_nlp(const PopProblem& pop, const Vector& x0, const NlpOptions& opts = {});

}  // namespace feasproj
