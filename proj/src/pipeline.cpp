#include "feasproj/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>

namespace feasproj {

namespace {

long ms_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::steady_clock::now() - t0)
      .count();
}

void dump_point(const std::string& stem, int stage, const VariableLayout& layout,
                const Vector& z, std::string* path_out) {
  if (stem.empty() || z.size() == 0) return;
  const std::string path = stem + ".s" + std::to_string(stage) + ".point.txt";
  std::ofstream out(path);
  if (!out) return;
  for (Index i = 0; i < z.size() && i < static_cast<Index>(layout.names.size()); ++i)
    out << layout.names[i] << " " << z[i] << "\n";
  *path_out = path;
}

void emit_trace(const NlpResult& r, int stage, const std::string& stem) {
  std::ostream* os = &std::cerr;
  std::ofstream file;
  if (!stem.empty()) {
    file.open(stem + ".s" + std::to_string(stage) + ".trace.csv");
    if (file) os = &file;
  }
  *os << "iter,objective,violation,penalty\n";
  for (const auto& t : r.trace)
    *os << t.outer << "," << t.objective << "," << t.violation << "," << t.penalty << "\n";
}

void fill_slacks(StageReport& rep, const PopProblem& prob, const Vector& point) {
  const auto& L = prob.layout;
  if (L.s_dim == 0 || point.size() < L.s_offset + L.s_dim) return;
  rep.slack_values = point.segment(L.s_offset, L.s_dim);
  rep.slack_names.assign(L.names.begin() + L.s_offset,
                         L.names.begin() + L.s_offset + L.s_dim);
}

}  // namespace

PipelineResult run_pipeline(const CaseData& cd, const std::optional<Perturbation>& perturb,
                            const PipelineOptions& opts) {
  CaseData inst = perturb ? apply_perturbation(cd, *perturb) : cd;
  if (!opts.instance_label.empty()) inst.name = opts.instance_label;

  const AdmittanceModel adm = build_admittance(inst);
  const FlowMatrices fm = build_flow_matrices(adm);
  const PopProblem op2 = build_op2(inst, fm);
  const PopProblem slacked = build_slacked(op2);
  auto [base, handle] = norm_epigraph(slacked, opts.norm);

  PipelineResult out;
  out.instance = inst.name;

  // ---------- Stage 1: projection onto the set of feasible inputs ----------
  StageReport s1;
  s1.stage = Stage::S1;
  s1.backend = opts.backend;
  s1.norm = opts.norm;
  double ub1 = 0;
  Vector s1_point;
  bool s1_ok = false;
  {
    const auto t0 = std::chrono::steady_clock::now();
    if (opts.backend == Backend::nlp) {
      PopProblem p1 = base;
      set_norm_objective(p1, handle);
      const Vector x0 = make_default_start(p1, inst, fm);
      // Stage 1 is solved tighter than the user tolerance so that UB1 is
      // attained by an actual point and the Stage-2 budget set is nonempty.
      NlpOptions o1 = opts.nlp;
      o1.feasibility_tol = std::min(1e-8, opts.nlp.feasibility_tol);
      o1.optimality_tol = std::min(1e-8, opts.nlp.optimality_tol);
      const NlpResult r = solve_nlp(p1, x0, o1);
      if (opts.trace) emit_trace(r, 1, opts.point_file_stem);
      ub1 = slack_norm_value(p1, opts.norm, r.point);
      s1.slack_norm = ub1;
      s1.objective = r.objective;
      s1.status = nlp_status_name(r.status);
      s1.point = r.point;
      s1_point = r.point;
      fill_slacks(s1, p1, r.point);
      dump_point(opts.point_file_stem, 1, p1.layout, r.point, &s1.point_file);
      s1_ok = r.status == NlpStatus::optimal_local || r.status == NlpStatus::max_iterations;
    } else {
      try {
        const RelaxationModel m1 = build_relaxation(inst, fm, true, opts.norm, std::nullopt);
        const SdpSolution sol = solve_sdp(m1.sdp, opts.sdp_tol);
        if (sol.status == SdpStatus::optimal || sol.status == SdpStatus::near_optimal) {
          ub1 = relaxation_norm_value(m1, sol.primal_objective);
          s1.lb = relaxation_norm_value(m1, sol.dual_objective);
          s1.slack_norm = ub1;
          s1.objective = sol.primal_objective;
          s1.slack_values = relaxation_slacks(m1, sol);
          s1.slack_names = m1.slack_names;
          s1_ok = true;
        }
        s1.status = sdp_status_name(sol.status);
      } catch (const SdpError& e) {
        s1.status = std::string("sdp_error: ") + e.what();
      }
    }
    s1.wall_ms = ms_since(t0);
  }
  if (s1.lb && *s1.lb > opts.feasibility_tol) out.declared_infeasible = true;
  out.stages.push_back(s1);
  if (!s1_ok) {
    out.stage_failure = true;
    out.exit_code = out.declared_infeasible ? 2 : 3;
    return out;
  }

  const bool feasible_as_given = ub1 <= opts.feasibility_tol;
  const double budget = feasible_as_given ? 0.0 : ub1 * (1.0 + opts.budget_slack);

  // ---------- Stage 2: optimize under the slack budget ----------
  StageReport s2;
  s2.stage = Stage::S2;
  s2.backend = opts.backend;
  s2.norm = opts.norm;
  s2.budget = budget;
  Vector chi_tilde;
  bool have_chi = false;
  {
    const auto t0 = std::chrono::steady_clock::now();
    if (opts.backend == Backend::nlp) {
      // A feasible instance gets the clean problem; otherwise the budget row
      // caps the slack norm at UB1.
      PopProblem p2 = feasible_as_given ? op2 : base;
      if (!feasible_as_given) add_norm_budget(p2, handle, budget);
      const Vector start = s1_point.head(p2.dim());
      const NlpResult r = solve_nlp(p2, start, opts.nlp);
      if (opts.trace) emit_trace(r, 2, opts.point_file_stem);
      s2.slack_norm = slack_norm_value(p2, opts.norm, r.point);
      s2.objective = r.objective;
      s2.status = nlp_status_name(r.status);
      s2.point = r.point;
      fill_slacks(s2, p2, r.point);
      dump_point(opts.point_file_stem, 2, p2.layout, r.point, &s2.point_file);
      if (r.status != NlpStatus::numerical_failure) {
        chi_tilde = r.point.head(op2.dim());
        have_chi = true;
      }
    } else {
      try {
        // The exact minimum budget leaves the relaxation without a strict
        // interior; a vanishing inflation keeps the central path usable.
        const double sdp_budget = budget * (1.0 + 1e-7) + 1e-10;
        const RelaxationModel m2 = build_relaxation(inst, fm, true, opts.norm, sdp_budget);
        const SdpSolution sol = solve_sdp(m2.sdp, opts.sdp_tol);
        s2.objective = sol.primal_objective;
        s2.lb = sol.dual_objective;
        s2.status = sdp_status_name(sol.status);
        if (sol.status == SdpStatus::optimal || sol.status == SdpStatus::near_optimal) {
          const RelaxationCandidate cand = extract_candidate(m2, sol, inst, fm, op2);
          s2.status += ";rank1_gap=" + std::to_string(cand.rank1_gap);
          s2.slack_values = relaxation_slacks(m2, sol);
          s2.slack_names = m2.slack_names;
          s2.slack_norm = s2.slack_values.size() > 0
                              ? (opts.norm == NormKind::l1 ? s2.slack_values.sum()
                                 : opts.norm == NormKind::l2 ? s2.slack_values.norm()
                                 : s2.slack_values.maxCoeff())
                              : 0.0;
          s2.point = cand.chi;
          dump_point(opts.point_file_stem, 2, op2.layout, cand.chi, &s2.point_file);
          chi_tilde = cand.chi;
          have_chi = true;
        }
      } catch (const SdpError& e) {
        s2.status = std::string("sdp_error: ") + e.what();
      } catch (const NotSolved&) {
        s2.status += ";extraction_failed";
      }
    }
    s2.wall_ms = ms_since(t0);
  }
  out.stages.push_back(s2);
  if (!have_chi) {
    out.stage_failure = true;
    out.exit_code = out.declared_infeasible ? 2 : 3;
    return out;
  }

  // ---------- Stage 3: projection onto the set of feasible solutions ----------
  StageReport s3;
  s3.stage = Stage::S3;
  s3.backend = opts.backend;
  s3.norm = opts.norm;
  {
    const auto t0 = std::chrono::steady_clock::now();
    const Stage3Result r = project_stage3(op2, inst, fm, chi_tilde, opts.stage3, opts.norm,
                                          opts.nlp, opts.feasibility_tol,
                                          opts.newton_max_iter);
    s3.objective = r.objective;
    s3.status = r.status;
    s3.point = r.point;
    s3.slack_norm = 0;
    dump_point(opts.point_file_stem, 3, op2.layout, r.point, &s3.point_file);
    if (r.has_certificate) out.certificate = r.certificate;
    if (!r.success) out.stage_failure = true;
    s3.wall_ms = ms_since(t0);
  }
  out.stages.push_back(s3);

  out.exit_code = out.declared_infeasible ? 2 : (out.stage_failure ? 3 : 0);
  return out;
}

}  // namespace feasproj
