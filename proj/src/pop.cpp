#include "feasproj/pop.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace feasproj {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

std::string bus_tag(int id) { return "[" + std::to_string(id) + "]"; }

std::string branch_tag(const CaseData& cd, Index l, Index m) {
  return "[" + std::to_string(cd.buses[l].id) + "->" + std::to_string(cd.buses[m].id) + "]";
}

}  // namespace

std::vector<GenAggregate> aggregate_generators(const CaseData& cd) {
  std::vector<GenAggregate> out;
  std::map<int, size_t> by_bus;
  std::vector<std::vector<size_t>> members;
  for (size_t gi = 0; gi < cd.generators.size(); ++gi) {
    const auto& g = cd.generators[gi];
    if (!g.status) continue;
    auto it = by_bus.find(g.bus);
    if (it == by_bus.end()) {
      by_bus[g.bus] = out.size();
      GenAggregate agg;
      agg.bus_id = g.bus;
      agg.bus_pos = cd.bus_index(g.bus);
      out.push_back(agg);
      members.push_back({gi});
    } else {
      members[it->second].push_back(gi);
    }
  }
  for (size_t a = 0; a < out.size(); ++a) {
    auto& agg = out[a];
    double cap = 0;
    for (size_t gi : members[a]) cap += std::abs(cd.generators[gi].Pmax);
    for (size_t gi : members[a]) {
      const auto& g = cd.generators[gi];
      agg.Pmax += g.Pmax;
      agg.Pmin += g.Pmin;
      agg.Qmax += g.Qmax;
      agg.Qmin += g.Qmin;
      const double w = cap > 0 ? std::abs(g.Pmax) / cap : 1.0 / members[a].size();
      const auto& c = cd.costs[gi];
      agg.c0 += c.c0;
      agg.c1 += w * c.c1;
      agg.c2 += w * w * c.c2;
    }
  }
  return out;
}

Index VariableLayout::index_of(const std::string& name) const {
  for (Index i = 0; i < static_cast<Index>(names.size()); ++i)
    if (names[i] == name) return i;
  throw std::runtime_error("no variable named " + name);
}

PopProblem build_op2(const CaseData& cd, const FlowMatrices& fm) {
  const Index n = fm.n_bus;
  if (n != static_cast<Index>(cd.buses.size()))
    throw DimensionMismatch("case/flow-matrix bus count mismatch");
  auto gens = aggregate_generators(cd);
  const Index ng = static_cast<Index>(gens.size());
  const Index nb = static_cast<Index>(fm.branches.size());

  PopProblem pop;
  VariableLayout& L = pop.layout;
  L.n_bus = n;
  L.x_offset = 0;
  L.pg_offset = 2 * n;
  L.qg_offset = 2 * n + ng;
  L.plm_offset = 2 * n + 2 * ng;
  L.qlm_offset = 2 * n + 2 * ng + nb;
  L.s_offset = L.t_offset = L.total = 2 * n + 2 * ng + 2 * nb;
  for (const auto& g : gens) L.gen_bus.push_back(g.bus_id);
  for (const auto& br : fm.branches) L.branches.emplace_back(br.from, br.to);
  L.names.resize(L.total);
  for (Index k = 0; k < n; ++k) {
    L.names[k] = "Vre" + bus_tag(cd.buses[k].id);
    L.names[n + k] = "Vim" + bus_tag(cd.buses[k].id);
  }
  for (Index g = 0; g < ng; ++g) {
    L.names[L.pg_offset + g] = "Pg" + bus_tag(gens[g].bus_id);
    L.names[L.qg_offset + g] = "Qg" + bus_tag(gens[g].bus_id);
  }
  for (Index j = 0; j < nb; ++j) {
    L.names[L.plm_offset + j] = "P" + branch_tag(cd, fm.branches[j].from, fm.branches[j].to);
    L.names[L.qlm_offset + j] = "Q" + branch_tag(cd, fm.branches[j].from, fm.branches[j].to);
  }
  pop.lower_bounds = Vector::Constant(L.total, -kInf);

  const Index N = L.total;
  auto lift = [&](const SparseMatrix& A) {
    SparseMatrix B(N, N);
    std::vector<Triplet> t;
    for (int k = 0; k < A.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(A, k); it; ++it)
        t.emplace_back(it.row(), it.col(), it.value());
    B.setFromTriplets(t.begin(), t.end());
    return B;
  };

  // Objective: sum of quadratic generation costs.
  QuadraticFunction obj = QuadraticFunction::zero(N);
  for (Index g = 0; g < ng; ++g) {
    const Index ip = L.pg_offset + g;
    obj.Q.coeffRef(ip, ip) += gens[g].c2;
    obj.c.coeffRef(ip) += gens[g].c1;
    obj.d += gens[g].c0;
  }
  pop.objective = obj;

  // Generation boxes.
  for (Index g = 0; g < ng; ++g) {
    const auto& a = gens[g];
    const std::string tag = bus_tag(a.bus_id);
    pop.constraints.push_back(
        {QuadraticFunction::linear(N, {{L.pg_offset + g, 1.0}}, -a.Pmax), Sense::le, "Pg_ub" + tag});
    pop.constraints.push_back(
        {QuadraticFunction::linear(N, {{L.pg_offset + g, 1.0}}, -a.Pmin), Sense::ge, "Pg_lb" + tag});
    pop.constraints.push_back(
        {QuadraticFunction::linear(N, {{L.qg_offset + g, 1.0}}, -a.Qmax), Sense::le, "Qg_ub" + tag});
    pop.constraints.push_back(
        {QuadraticFunction::linear(N, {{L.qg_offset + g, 1.0}}, -a.Qmin), Sense::ge, "Qg_lb" + tag});
    pop.parameters["Pmax" + tag] = a.Pmax;
    pop.parameters["Pmin" + tag] = a.Pmin;
    pop.parameters["Qmax" + tag] = a.Qmax;
    pop.parameters["Qmin" + tag] = a.Qmin;
    pop.parameters["c2" + tag] = a.c2;
    pop.parameters["c1" + tag] = a.c1;
    pop.parameters["c0" + tag] = a.c0;
  }

  // Power balance: tr(Yk xx^T) + Pd - Pg = 0 (Pg only at generator
  // buses; pure load buses keep the constant 0 in its place).
  std::map<Index, Index> gen_at;  // bus position -> aggregate index
  for (Index g = 0; g < ng; ++g) gen_at[gens[g].bus_pos] = g;
  for (Index k = 0; k < n; ++k) {
    const auto& b = cd.buses[k];
    const std::string tag = bus_tag(b.id);
    QuadraticFunction fp = QuadraticFunction::from_trace(lift(fm.Yk[k]), b.Pd);
    QuadraticFunction fq = QuadraticFunction::from_trace(lift(fm.Ybar_k[k]), b.Qd);
    auto it = gen_at.find(k);
    if (it != gen_at.end()) {
      fp.c.coeffRef(L.pg_offset + it->second) -= 1.0;
      fq.c.coeffRef(L.qg_offset + it->second) -= 1.0;
    }
    pop.constraints.push_back({std::move(fp), Sense::eq, "P_bal" + tag});
    pop.constraints.push_back({std::move(fq), Sense::eq, "Q_bal" + tag});
    pop.parameters["Pd" + tag] = b.Pd;
    pop.parameters["Qd" + tag] = b.Qd;
  }

  // Voltage box.
  for (Index k = 0; k < n; ++k) {
    const auto& b = cd.buses[k];
    const std::string tag = bus_tag(b.id);
    pop.constraints.push_back({QuadraticFunction::from_trace(lift(fm.Mk[k]), -b.Vmax * b.Vmax),
                               Sense::le, "V_ub" + tag});
    pop.constraints.push_back({QuadraticFunction::from_trace(lift(fm.Mk[k]), -b.Vmin * b.Vmin),
                               Sense::ge, "V_lb" + tag});
    pop.parameters["Vmax" + tag] = b.Vmax;
    pop.parameters["Vmin" + tag] = b.Vmin;
  }

  // Flow definitions and thermal limits, both orientations.
  for (Index j = 0; j < nb; ++j) {
    const auto& br = fm.branches[j];
    const std::string tag = branch_tag(cd, br.from, br.to);
    QuadraticFunction fp = QuadraticFunction::from_trace(lift(br.Ylm), 0.0);
    fp.c.coeffRef(L.plm_offset + j) -= 1.0;
    pop.constraints.push_back({std::move(fp), Sense::eq, "P_def" + tag});
    QuadraticFunction fq = QuadraticFunction::from_trace(lift(br.Ybar_lm), 0.0);
    fq.c.coeffRef(L.qlm_offset + j) -= 1.0;
    pop.constraints.push_back({std::move(fq), Sense::eq, "Q_def" + tag});
    if (br.rate > 0) {
      QuadraticFunction fl = QuadraticFunction::zero(N);
      fl.Q.coeffRef(L.plm_offset + j, L.plm_offset + j) = 1.0;
      fl.Q.coeffRef(L.qlm_offset + j, L.qlm_offset + j) = 1.0;
      fl.d = -br.rate * br.rate;
      pop.constraints.push_back({std::move(fl), Sense::le, "S_lim" + tag});
      pop.parameters["Smax" + tag] = br.rate;
    }
  }

  // Rotational gauge fix: Im V at the slack bus is zero.
  const Index ref = cd.slack_index();
  pop.constraints.push_back(
      {QuadraticFunction::linear(N, {{n + ref, 1.0}}, 0.0), Sense::eq, "angle_ref"});

  return pop;
}

PopProblem build_slacked(const PopProblem& pop) {
  const VariableLayout& L0 = pop.layout;
  const Index ng = static_cast<Index>(L0.gen_bus.size());
  const Index n = L0.n_bus;
  const Index s_dim = 4 * ng + 2 * n;
  const Index N0 = L0.total;
  const Index N = N0 + s_dim;

  PopProblem out;
  out.layout = L0;
  out.layout.s_offset = N0;
  out.layout.s_dim = s_dim;
  out.layout.t_offset = N;
  out.layout.t_dim = 0;
  out.layout.total = N;
  out.layout.names.resize(N);
  out.parameters = pop.parameters;

  // Slack ordering: [sP+, sP-, sQ+, sQ-] per generator bus, then
  // [sV+, sV-] per bus.
  std::map<std::string, Index> slack_of;
  Index si = 0;
  for (Index g = 0; g < ng; ++g) {
    const std::string tag = "[" + std::to_string(L0.gen_bus[g]) + "]";
    for (const char* fam : {"sP+", "sP-", "sQ+", "sQ-"}) {
      out.layout.names[N0 + si] = std::string(fam) + tag;
      slack_of[std::string(fam) + tag] = si++;
    }
  }
  for (Index k = 0; k < n; ++k) {
    // Bus ids are recoverable from the Vre names built by build_op2.
    const std::string tag = L0.names[k].substr(3);
    for (const char* fam : {"sV+", "sV-"}) {
      out.layout.names[N0 + si] = std::string(fam) + tag;
      slack_of[std::string(fam) + tag] = si++;
    }
  }

  out.lower_bounds = Vector::Constant(N, -std::numeric_limits<double>::infinity());
  out.lower_bounds.head(N0) = pop.lower_bounds;
  out.lower_bounds.tail(s_dim).setZero();

  auto widen = [&](const QuadraticFunction& f) {
    QuadraticFunction g;
    g.Q = f.Q;
    g.Q.conservativeResize(N, N);
    g.c = f.c;
    g.c.conservativeResize(N);
    g.d = f.d;
    return g;
  };

  out.objective = widen(pop.objective);
  for (const auto& con : pop.constraints) {
    Constraint c;
    c.f = widen(con.f);
    c.sense = con.sense;
    c.name = con.name;
    // upper bounds get -s+, lower bounds get +s-.
    auto slacken = [&](const std::string& fam, const std::string& tag, double sign) {
      const Index idx = slack_of.at(fam + tag);
      c.f.c.coeffRef(N0 + idx) += sign;
      c.slack_index = static_cast<int>(idx);
    };
    if (con.name.rfind("Pg_ub", 0) == 0)
      slacken("sP+", con.name.substr(5), -1.0);
    else if (con.name.rfind("Pg_lb", 0) == 0)
      slacken("sP-", con.name.substr(5), +1.0);
    else if (con.name.rfind("Qg_ub", 0) == 0)
      slacken("sQ+", con.name.substr(5), -1.0);
    else if (con.name.rfind("Qg_lb", 0) == 0)
      slacken("sQ-", con.name.substr(5), +1.0);
    else if (con.name.rfind("V_ub", 0) == 0)
      slacken("sV+", con.name.substr(4), -1.0);
    else if (con.name.rfind("V_lb", 0) == 0)
      slacken("sV-", con.name.substr(4), +1.0);
    out.constraints.push_back(std::move(c));
  }
  return out;
}

std::pair<PopProblem, NormHandle> norm_epigraph(const PopProblem& pop, NormKind kind) {
  if (!pop.layout.has_slacks()) throw NoSlackSegment();
  PopProblem out = pop;
  NormHandle h;
  h.kind = kind;
  const Index s0 = pop.layout.s_offset;
  const Index sd = pop.layout.s_dim;
  if (kind == NormKind::l1) {
    h.form = QuadraticFunction::zero(pop.dim());
    for (Index i = 0; i < sd; ++i) h.form.c.coeffRef(s0 + i) = 1.0;
    return {out, h};
  }
  if (kind == NormKind::l2) {
    h.form = QuadraticFunction::zero(pop.dim());
    for (Index i = 0; i < sd; ++i) h.form.Q.coeffRef(s0 + i, s0 + i) = 1.0;
    return {out, h};
  }
  // linf: auxiliary t with s_i <= t, t >= 0.
  const Index N = pop.dim() + 1;
  out.layout.t_offset = pop.dim();
  out.layout.t_dim = 1;
  out.layout.total = N;
  out.layout.names.push_back("t_inf");
  Vector lb = Vector::Constant(N, -std::numeric_limits<double>::infinity());
  lb.head(pop.dim()) = pop.lower_bounds;
  lb[N - 1] = 0.0;
  out.lower_bounds = lb;
  auto widen = [&](QuadraticFunction f) {
    f.Q.conservativeResize(N, N);
    f.c.conservativeResize(N);
    return f;
  };
  out.objective = widen(out.objective);
  for (auto& c : out.constraints) c.f = widen(c.f);
  for (Index i = 0; i < sd; ++i) {
    QuadraticFunction f = QuadraticFunction::linear(N, {{s0 + i, 1.0}, {N - 1, -1.0}});
    out.constraints.push_back(
        {std::move(f), Sense::le, "s_le_t[" + std::to_string(i) + "]"});
  }
  h.form = QuadraticFunction::linear(N, {{N - 1, 1.0}});
  h.t_index = N - 1;
  return {out, h};
}

void set_norm_objective(PopProblem& pop, const NormHandle& h) {
  if (h.form.dim() != pop.dim())
    throw DimensionMismatch("norm handle does not match problem layout");
  pop.objective = h.form;
}

void add_norm_budget(PopProblem& pop, const NormHandle& h, double ub) {
  if (h.form.dim() != pop.dim())
    throw DimensionMismatch("norm handle does not match problem layout");
  QuadraticFunction f = h.form;
  f.d -= h.kind == NormKind::l2 ? ub * ub : ub;
  pop.constraints.push_back({std::move(f), Sense::le, "slack_budget"});
  pop.parameters["budget"] = ub;
}

double slack_norm_value(const PopProblem& pop, NormKind kind, const Vector& z) {
  const Index s0 = pop.layout.s_offset;
  const Index sd = pop.layout.s_dim;
  if (sd == 0) return 0.0;
  const auto s = z.segment(s0, sd);
  switch (kind) {
    case NormKind::l1: return s.cwiseMax(0.0).sum();
    case NormKind::l2: return s.cwiseMax(0.0).norm();
    case NormKind::linf: return s.cwiseMax(0.0).maxCoeff();
  }
  return 0.0;
}

Evaluation evaluate(const PopProblem& pop, const Vector& z) {
  if (z.size() != pop.dim()) throw DimensionMismatch("point dimension mismatch");
  Evaluation ev;
  ev.objective = pop.objective.value(z);
  ev.residuals.resize(static_cast<Index>(pop.constraints.size()));
  for (size_t i = 0; i < pop.constraints.size(); ++i) {
    const auto& c = pop.constraints[i];
    const double v = c.f.value(z);
    double r = 0;
    switch (c.sense) {
      case Sense::eq: r = std::abs(v); break;
      case Sense::le: r = std::max(0.0, v); break;
      case Sense::ge: r = std::max(0.0, -v); break;
    }
    ev.residuals[static_cast<Index>(i)] = r;
    ev.max_violation = std::max(ev.max_violation, r);
  }
  for (Index i = 0; i < pop.dim(); ++i)
    if (pop.lower_bounds[i] > -kInf)
      ev.max_violation = std::max(ev.max_violation, pop.lower_bounds[i] - z[i]);
  return ev;
}

Vector chi_from_voltage(const PopProblem& pop, const CaseData& cd, const FlowMatrices& fm,
                        const Vector& x) {
  const VariableLayout& L = pop.layout;
  if (x.size() != 2 * L.n_bus) throw DimensionMismatch("voltage vector dimension mismatch");
  Vector z = Vector::Zero(pop.dim());
  z.head(2 * L.n_bus) = x;
  for (Index g = 0; g < static_cast<Index>(L.gen_bus.size()); ++g) {
    const Index k = cd.bus_index(L.gen_bus[g]);
    z[L.pg_offset + g] =
        QuadraticFunction::from_trace(fm.Yk[k], cd.buses[k].Pd).value(x);
    z[L.qg_offset + g] =
        QuadraticFunction::from_trace(fm.Ybar_k[k], cd.buses[k].Qd).value(x);
  }
  for (Index j = 0; j < static_cast<Index>(L.branches.size()); ++j) {
    z[L.plm_offset + j] = QuadraticFunction::from_trace(fm.branches[j].Ylm, 0.0).value(x);
    z[L.qlm_offset + j] = QuadraticFunction::from_trace(fm.branches[j].Ybar_lm, 0.0).value(x);
  }
  return z;
}

Vector make_default_start(const PopProblem& pop, const CaseData& cd, const FlowMatrices& fm) {
  const VariableLayout& L = pop.layout;
  Vector x = Vector::Zero(2 * L.n_bus);
  x.head(L.n_bus).setOnes();
  Vector z = Vector::Zero(pop.dim());
  z.head(L.unslacked_dim()) = chi_from_voltage(pop, cd, fm, x).head(L.unslacked_dim());
  for (Index g = 0; g < static_cast<Index>(L.gen_bus.size()); ++g) {
    const std::string tag = "[" + std::to_string(L.gen_bus[g]) + "]";
    z[L.pg_offset + g] =
        0.5 * (pop.parameters.at("Pmin" + tag) + pop.parameters.at("Pmax" + tag));
    z[L.qg_offset + g] =
        0.5 * (pop.parameters.at("Qmin" + tag) + pop.parameters.at("Qmax" + tag));
  }
  // Warm slack start: each slacked row starts feasible.
  for (const auto& c : pop.constraints) {
    if (c.slack_index < 0) continue;
    const Index si = L.s_offset + c.slack_index;
    const double at_zero = c.f.value(z);  // z has s = 0 here
    double need = 0;
    if (c.sense == Sense::le) need = std::max(0.0, at_zero);
    else if (c.sense == Sense::ge) need = std::max(0.0, -at_zero);
    z[si] = std::max(z[si], need);
  }
  if (L.t_dim > 0 && L.s_dim > 0)
    z[L.t_offset] = z.segment(L.s_offset, L.s_dim).maxCoeff();
  return z;
}

}  // namespace feasproj
