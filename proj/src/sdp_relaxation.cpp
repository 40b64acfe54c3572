#include "feasproj/sdp_relaxation.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace feasproj {

namespace {

// Raw entry push for W traces: the source matrix stores both triangles; the
// eliminated gauge coordinate is skipped and the remaining indices shift.
struct WTrace {
  int block;
  Index drop;
  Index map(Index i) const { return i < drop ? i : i - 1; }
  void push(SdpConstraint& row, const SparseMatrix& A, double coeff) const {
    if (coeff == 0.0) return;
    for (int k = 0; k < A.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(A, k); it; ++it) {
        if (it.value() == 0.0 || it.row() == drop || it.col() == drop) continue;
        row.entries.push_back({block, map(it.row()), map(it.col()), coeff * it.value()});
      }
  }
};

void push_diag(SdpConstraint& row, int block, Index i, double v) {
  row.entries.push_back({block, i, i, v});
}

void push_sym(SdpConstraint& row, int block, Index r, Index c, double v) {
  if (r == c) {
    row.entries.push_back({block, r, c, v});
  } else {
    row.entries.push_back({block, r, c, v / 2.0});
    row.entries.push_back({block, c, r, v / 2.0});
  }
}

}  // namespace

RelaxationModel build_relaxation(const CaseData& cd, const FlowMatrices& fm, bool slacked,
                                 NormKind norm, std::optional<double> budget) {
  if (static_cast<Index>(cd.buses.size()) != fm.n_bus)
    throw DimensionMismatch("case/flow-matrix bus count mismatch");
  if (budget && !slacked)
    throw DimensionMismatch("budget requires the slacked variant");

  RelaxationModel model;
  model.n_bus = fm.n_bus;
  model.slacked = slacked;
  model.norm = norm;
  model.budget = budget;
  model.cost_objective = !slacked || budget.has_value();
  SdpProblem& sdp = model.sdp;
  const Index n = fm.n_bus;
  const auto gens = aggregate_generators(cd);
  const Index ng = static_cast<Index>(gens.size());

  model.gauge_drop = n + cd.slack_index();
  model.w_block = sdp.add_block(BlockKind::psd, 2 * n - 1);
  const WTrace wt{model.w_block, model.gauge_drop};
  const Index s_dim = slacked ? 4 * ng + 2 * n : 0;
  if (slacked) {
    model.slack_block = sdp.add_block(BlockKind::nonneg, s_dim);
    for (const auto& g : gens) {
      const std::string tag = "[" + std::to_string(g.bus_id) + "]";
      for (const char* fam : {"sP+", "sP-", "sQ+", "sQ-"})
        model.slack_names.push_back(std::string(fam) + tag);
    }
    for (Index k = 0; k < n; ++k) {
      const std::string tag = "[" + std::to_string(cd.buses[k].id) + "]";
      for (const char* fam : {"sV+", "sV-"})
        model.slack_names.push_back(std::string(fam) + tag);
    }
  }
  if (model.cost_objective) model.alpha_block = sdp.add_block(BlockKind::nonneg, ng);

  // Count scalar inequality rows to size the row-slack block: four box rows
  // per generator aggregate, two voltage rows per bus, plus norm rows.
  Index n_aux = 4 * ng + 2 * n;
  if (slacked && norm == NormKind::linf) n_aux += s_dim + (budget ? 1 : 0);
  if (slacked && norm == NormKind::l1 && budget) n_aux += 1;
  if (slacked && norm == NormKind::l2 && budget) n_aux += 1;
  model.aux_block = sdp.add_block(BlockKind::nonneg, n_aux);
  Index aux_next = 0;

  if (slacked) {
    if (norm == NormKind::linf) {
      model.t_block = sdp.add_block(BlockKind::nonneg, 1);
    } else if (norm == NormKind::l2) {
      model.t_block = sdp.add_block(BlockKind::nonneg, s_dim);
    }
  }

  std::vector<bool> is_gen(n, false);
  std::vector<Index> agg_at(n, -1);
  for (Index g = 0; g < ng; ++g) {
    is_gen[gens[g].bus_pos] = true;
    agg_at[gens[g].bus_pos] = g;
  }

  auto slack_index = [&](Index g, int fam) { return 4 * g + fam; };  // P+,P-,Q+,Q-
  auto vslack_index = [&](Index k, int fam) { return 4 * ng + 2 * k + fam; };

  // Balance at load buses, slack-relaxed boxes elsewhere.
  for (Index k = 0; k < n; ++k) {
    const auto& bus = cd.buses[k];
    if (!is_gen[k]) {
      SdpConstraint rp;
      wt.push(rp, fm.Yk[k], 1.0);
      rp.rhs = -bus.Pd;
      sdp.rows.push_back(std::move(rp));
      SdpConstraint rq;
      wt.push(rq, fm.Ybar_k[k], 1.0);
      rq.rhs = -bus.Qd;
      sdp.rows.push_back(std::move(rq));
    } else {
      const Index g = agg_at[k];
      const auto& ga = gens[g];
      SdpConstraint pub;  // tr(Yk W) + Pd <= Pmax + sP+
      wt.push(pub, fm.Yk[k], 1.0);
      if (slacked) push_diag(pub, model.slack_block, slack_index(g, 0), -1.0);
      push_diag(pub, model.aux_block, aux_next++, 1.0);
      pub.rhs = ga.Pmax - bus.Pd;
      sdp.rows.push_back(std::move(pub));
      SdpConstraint plb;  // tr(Yk W) + Pd >= Pmin - sP-
      wt.push(plb, fm.Yk[k], 1.0);
      if (slacked) push_diag(plb, model.slack_block, slack_index(g, 1), 1.0);
      push_diag(plb, model.aux_block, aux_next++, -1.0);
      plb.rhs = ga.Pmin - bus.Pd;
      sdp.rows.push_back(std::move(plb));
      SdpConstraint qub;
      wt.push(qub, fm.Ybar_k[k], 1.0);
      if (slacked) push_diag(qub, model.slack_block, slack_index(g, 2), -1.0);
      push_diag(qub, model.aux_block, aux_next++, 1.0);
      qub.rhs = ga.Qmax - bus.Qd;
      sdp.rows.push_back(std::move(qub));
      SdpConstraint qlb;
      wt.push(qlb, fm.Ybar_k[k], 1.0);
      if (slacked) push_diag(qlb, model.slack_block, slack_index(g, 3), 1.0);
      push_diag(qlb, model.aux_block, aux_next++, -1.0);
      qlb.rhs = ga.Qmin - bus.Qd;
      sdp.rows.push_back(std::move(qlb));
    }
    SdpConstraint vub;
    wt.push(vub, fm.Mk[k], 1.0);
    if (slacked) push_diag(vub, model.slack_block, vslack_index(k, 0), -1.0);
    push_diag(vub, model.aux_block, aux_next++, 1.0);
    vub.rhs = bus.Vmax * bus.Vmax;
    sdp.rows.push_back(std::move(vub));
    SdpConstraint vlb;
    wt.push(vlb, fm.Mk[k], 1.0);
    if (slacked) push_diag(vlb, model.slack_block, vslack_index(k, 1), 1.0);
    push_diag(vlb, model.aux_block, aux_next++, -1.0);
    vlb.rhs = bus.Vmin * bus.Vmin;
    sdp.rows.push_back(std::move(vlb));
  }

  // Thermal limits as 3x3 arrow LMIs per rated oriented branch with the flows
  // substituted: [[S, P, Q], [P, S, 0], [Q, 0, S]] >= 0.
  for (const auto& br : fm.branches) {
    if (br.rate <= 0) {
      model.flow_blocks.push_back(-1);
      continue;
    }
    const int fb = sdp.add_block(BlockKind::psd, 3);
    model.flow_blocks.push_back(fb);
    for (Index dpos = 0; dpos < 3; ++dpos) {
      SdpConstraint r;
      push_diag(r, fb, dpos, 1.0);
      r.rhs = br.rate;
      sdp.rows.push_back(std::move(r));
    }
    SdpConstraint rz;
    push_sym(rz, fb, 1, 2, 1.0);
    rz.rhs = 0;
    sdp.rows.push_back(std::move(rz));
    SdpConstraint rp;
    push_sym(rp, fb, 0, 1, 1.0);
    wt.push(rp, br.Ylm, -1.0);
    rp.rhs = 0;
    sdp.rows.push_back(std::move(rp));
    SdpConstraint rq;
    push_sym(rq, fb, 0, 2, 1.0);
    wt.push(rq, br.Ybar_lm, -1.0);
    rq.rhs = 0;
    sdp.rows.push_back(std::move(rq));
  }

  // Cost epigraphs: alpha_k >= c2 Pg^2 + c1 Pg + c0 with Pg = tr(Yk W) + Pd,
  // via the 2x2 Schur form [[alpha - c1 Pg - c0, sqrt(c2) Pg], [., 1]] >= 0.
  if (model.cost_objective) {
    for (Index g = 0; g < ng; ++g) {
      const auto& ga = gens[g];
      const Index k = ga.bus_pos;
      const double pd = cd.buses[k].Pd;
      const double sq = std::sqrt(std::max(ga.c2, 0.0));
      model.a_k.push_back(ga.c0 + ga.c1 * pd);
      model.b_k.push_back(sq * pd);
      const int cb = sdp.add_block(BlockKind::psd, 2);
      model.cost_blocks.push_back(cb);
      SdpConstraint r1;  // G11 - alpha + c1 tr(Yk W) = -(c0 + c1 Pd)
      push_diag(r1, cb, 0, 1.0);
      push_diag(r1, model.alpha_block, g, -1.0);
      wt.push(r1, fm.Yk[k], ga.c1);
      r1.rhs = -model.a_k.back();
      sdp.rows.push_back(std::move(r1));
      SdpConstraint r2;  // G12 - sqrt(c2) tr(Yk W) = b_k
      push_sym(r2, cb, 0, 1, 1.0);
      wt.push(r2, fm.Yk[k], -sq);
      r2.rhs = model.b_k.back();
      sdp.rows.push_back(std::move(r2));
      SdpConstraint r3;
      push_diag(r3, cb, 1, 1.0);
      r3.rhs = 1.0;
      sdp.rows.push_back(std::move(r3));
    }
    for (Index g = 0; g < ng; ++g) sdp.add_objective(model.alpha_block, g, g, 1.0);
  }

  if (slacked) {
    if (norm == NormKind::linf) {
      for (Index i = 0; i < s_dim; ++i) {  // s_i - t + u = 0
        SdpConstraint r;
        push_diag(r, model.slack_block, i, 1.0);
        push_diag(r, model.t_block, 0, -1.0);
        push_diag(r, model.aux_block, aux_next++, 1.0);
        r.rhs = 0;
        sdp.rows.push_back(std::move(r));
      }
    } else if (norm == NormKind::l2) {
      // per-slack epigraphs t_i >= s_i^2 via [[t_i, s_i], [s_i, 1]] >= 0
      for (Index i = 0; i < s_dim; ++i) {
        const int lb = sdp.add_block(BlockKind::psd, 2);
        SdpConstraint r1;
        push_diag(r1, lb, 0, 1.0);
        push_diag(r1, model.t_block, i, -1.0);
        r1.rhs = 0;
        sdp.rows.push_back(std::move(r1));
        SdpConstraint r2;
        push_sym(r2, lb, 0, 1, 1.0);
        push_diag(r2, model.slack_block, i, -1.0);
        r2.rhs = 0;
        sdp.rows.push_back(std::move(r2));
        SdpConstraint r3;
        push_diag(r3, lb, 1, 1.0);
        r3.rhs = 1.0;
        sdp.rows.push_back(std::move(r3));
      }
    }
    if (!model.cost_objective) {
      // Stage-1 objective: the slack norm.
      if (norm == NormKind::l1)
        for (Index i = 0; i < s_dim; ++i) sdp.add_objective(model.slack_block, i, i, 1.0);
      else if (norm == NormKind::linf)
        sdp.add_objective(model.t_block, 0, 0, 1.0);
      else
        for (Index i = 0; i < s_dim; ++i) sdp.add_objective(model.t_block, i, i, 1.0);
    } else if (budget) {
      SdpConstraint r;
      if (norm == NormKind::l1) {
        for (Index i = 0; i < s_dim; ++i) push_diag(r, model.slack_block, i, 1.0);
        r.rhs = *budget;
      } else if (norm == NormKind::linf) {
        push_diag(r, model.t_block, 0, 1.0);
        r.rhs = *budget;
      } else {
        for (Index i = 0; i < s_dim; ++i) push_diag(r, model.t_block, i, 1.0);
        r.rhs = (*budget) * (*budget);
      }
      push_diag(r, model.aux_block, aux_next++, 1.0);
      sdp.rows.push_back(std::move(r));
    }
  }

  return model;
}

double relaxation_norm_value(const RelaxationModel& model, double v) {
  if (model.norm == NormKind::l2) return std::sqrt(std::max(v, 0.0));
  return std::max(v, 0.0);
}

Vector relaxation_slacks(const RelaxationModel& model, const SdpSolution& sol) {
  if (model.slack_block < 0) return Vector();
  return sol.X[model.slack_block].col(0);
}

RelaxationCandidate extract_candidate(const RelaxationModel& model, const SdpSolution& sol,
                                      const CaseData& cd, const FlowMatrices& fm,
                                      const PopProblem& unslacked) {
  if (sol.status != SdpStatus::optimal && sol.status != SdpStatus::near_optimal)
    throw NotSolved();
  const Matrix& W = sol.X[model.w_block];
  Eigen::SelfAdjointEigenSolver<Matrix> es(W);
  const Index d = W.rows();
  const double l1 = es.eigenvalues()[d - 1];
  const double l2 = d > 1 ? es.eigenvalues()[d - 2] : 0.0;
  RelaxationCandidate out;
  out.rank1_gap = l1 > 0 ? std::max(l2, 0.0) / l1 : 1.0;
  const Vector xr = std::sqrt(std::max(l1, 0.0)) * es.eigenvectors().col(d - 1);
  // Reinsert the eliminated gauge coordinate and fix the sign so the slack
  // bus voltage is positive real.
  const Index n = model.n_bus;
  Vector x = Vector::Zero(2 * n);
  for (Index i = 0, j = 0; i < 2 * n; ++i) {
    if (i == model.gauge_drop) continue;
    x[i] = xr[j++];
  }
  if (x[cd.slack_index()] < 0) x = -x;
  out.x = x;
  out.chi = chi_from_voltage(unslacked, cd, fm, x);
  return out;
}

}  // namespace feasproj
