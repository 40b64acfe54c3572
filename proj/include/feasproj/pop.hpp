#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "feasproj/case_data.hpp"
#include "feasproj/network_model.hpp"
#include "feasproj/quadratic.hpp"

namespace feasproj {

enum class Sense { eq, le, ge };

class DimensionMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NoSlackSegment : public std::runtime_error {
 public:
  NoSlackSegment() : std::runtime_error("problem has no slack segment") {}
};

// Ordered variable segments: x (2|N| rectangular voltages, Re then Im),
// Pg/Qg per generator bus, Plm/Qlm per oriented branch, slack segment s,
// epigraph auxiliaries t.
struct VariableLayout {
  Index n_bus = 0;
  std::vector<int> gen_bus;                       // aggregated generator bus ids
  std::vector<std::pair<Index, Index>> branches;  // oriented (from, to) positions
  Index x_offset = 0;
  Index pg_offset = 0, qg_offset = 0;
  Index plm_offset = 0, qlm_offset = 0;
  Index s_offset = 0, s_dim = 0;
  Index t_offset = 0, t_dim = 0;
  Index total = 0;
  std::vector<std::string> names;

  // The unslacked variables always form a prefix; s and t are appended.
  Index unslacked_dim() const { return s_offset; }
  Index index_of(const std::string& name) const;
  bool has_slacks() const { return s_dim > 0; }
};

struct Constraint {
  QuadraticFunction f;
  Sense sense = Sense::eq;
  std::string name;
  int slack_index = -1;  // index into the s segment when this row is slacked
};

struct PopProblem {
  VariableLayout layout;
  QuadraticFunction objective;
  std::vector<Constraint> constraints;
  std::map<std::string, double> parameters;
  Vector lower_bounds;  // -inf where free; slack and epigraph variables get 0

  Index dim() const { return layout.total; }
};

// One aggregate per bus carrying at least one in-service generator. Bounds
// and constant cost terms are summed; c1 and c2 are capacity-weighted so a
// dispatch split proportional to Pmax reproduces the summed cost.
struct GenAggregate {
  int bus_id = 0;
  Index bus_pos = 0;
  double Pmax = 0, Pmin = 0, Qmax = 0, Qmin = 0;
  double c2 = 0, c1 = 0, c0 = 0;
};

std::vector<GenAggregate> aggregate_generators(const CaseData& cd);

PopProblem build_op2(const CaseData& cd, const FlowMatrices& fm);

// Replaces the generation and voltage boxes by their slack-relaxed forms and
// appends the nonnegative slack segment; power balance, flow limits and flow
// definitions stay as in build_op2.
PopProblem build_slacked(const PopProblem& pop);

// Norm form over the slack segment, usable as a Stage-1 objective or a
// Stage-2 budget row. l1 returns the linear sum (valid since s >= 0), l2 the
// squared norm, linf an auxiliary bound variable t with s_i <= t.
struct NormHandle {
  NormKind kind = NormKind::l1;
  QuadraticFunction form;  // over the (possibly extended) layout
  Index t_index = -1;
};

std::pair<PopProblem, NormHandle> norm_epigraph(const PopProblem& pop, NormKind kind);

void set_norm_objective(PopProblem& pop, const NormHandle& h);
void add_norm_budget(PopProblem& pop, const NormHandle& h, double ub);
// Actual p-norm of the slack segment at z (sqrt of the form for l2,
// max s_i for linf).
double slack_norm_value(const PopProblem& pop, NormKind kind, const Vector& z);

struct Evaluation {
  double objective = 0;
  Vector residuals;  // aligned with constraints; violation measure per row
  double max_violation = 0;
};

Evaluation evaluate(const PopProblem& pop, const Vector& z);

// Flat voltage start, box-midpoint generation, flows consistent with the
// flat voltage, slacks at the violation they must absorb.
Vector make_default_start(const PopProblem& pop, const CaseData& cd, const FlowMatrices& fm);

// Assembles a full decision vector from a voltage vector: generation from
// the power balance, flows from their defining traces. z sized to pop.dim().
Vector chi_from_voltage(const PopProblem& pop, const CaseData& cd, const FlowMatrices& fm,
                        const Vector& x);

}  // namespace feasproj
