#include "feasproj/certify.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <limits>

namespace feasproj {

const double kAlpha0 = (13.0 - 3.0 * std::sqrt(17.0)) / 4.0;

Vector system_value(const PolySystem& sys, const Vector& x) {
  Vector f(static_cast<Index>(sys.equations.size()));
  for (size_t i = 0; i < sys.equations.size(); ++i)
    f[static_cast<Index>(i)] = sys.equations[i].value(x);
  return f;
}

Matrix system_jacobian(const PolySystem& sys, const Vector& x) {
  Matrix J(static_cast<Index>(sys.equations.size()), sys.dim);
  for (size_t i = 0; i < sys.equations.size(); ++i)
    J.row(static_cast<Index>(i)) = sys.equations[i].gradient(x).transpose();
  return J;
}

Matrix pseudo_inverse(const Matrix& J, double rel_tol, bool* rank_deficient) {
  Eigen::JacobiSVD<Matrix> svd(J, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double smax = sv.size() > 0 ? sv[0] : 0.0;
  const double cut = rel_tol * smax;
  Vector inv = Vector::Zero(sv.size());
  bool truncated = false;
  for (Index i = 0; i < sv.size(); ++i) {
    if (sv[i] > cut && sv[i] > 0)
      inv[i] = 1.0 / sv[i];
    else
      truncated = true;
  }
  if (rank_deficient) *rank_deficient = truncated;
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Vector newton_step(const PolySystem& sys, const Vector& x) {
  const Vector f = system_value(sys, x);
  const Matrix J = system_jacobian(sys, x);
  if (!f.allFinite() || !J.allFinite())
    throw NonFiniteEncountered("non-finite system value or Jacobian");
  return x - pseudo_inverse(J) * f;
}

AlphaCertificate alpha_test(const PolySystem& sys, const Vector& x) {
  AlphaCertificate cert;
  cert.alpha0 = kAlpha0;
  const Vector f = system_value(sys, x);
  const Matrix J = system_jacobian(sys, x);
  if (!f.allFinite() || !J.allFinite())
    throw NonFiniteEncountered("non-finite system value or Jacobian");
  const Matrix Jp = pseudo_inverse(J);
  const Vector step = Jp * f;
  cert.beta = step.norm();
  cert.refined_point = x - step;
  cert.distance_bound = 2.0 * cert.beta;

  // Only k = 2 contributes for quadratics: gamma is bounded by the spectral
  // norm of the unfolded tensor B_{l,jk} = sum_i Jp_{li} (Q_i)_{jk}, computed
  // as sqrt(lambda_max(Jp * S * Jp^T)) with S_{ii'} = tr(Q_i Q_i').
  const Index ne = static_cast<Index>(sys.equations.size());
  Matrix S = Matrix::Zero(ne, ne);
  for (Index i = 0; i < ne; ++i) {
    const SparseMatrix& Qi = sys.equations[i].Q;
    for (Index j = i; j < ne; ++j) {
      double dot = 0;
      const SparseMatrix& Qj = sys.equations[j].Q;
      for (int k = 0; k < Qi.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(Qi, k); it; ++it)
          dot += it.value() * Qj.coeff(it.row(), it.col());
      S(i, j) = S(j, i) = dot;
    }
  }
  const Matrix G = Jp * S * Jp.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> es(G);
  const double lmax = es.eigenvalues().size() > 0
                          ? std::max(0.0, es.eigenvalues().maxCoeff())
                          : 0.0;
  cert.gamma = std::sqrt(lmax);
  cert.alpha = cert.beta * cert.gamma;
  cert.certified = cert.alpha <= cert.alpha0;
  return cert;
}

NewtonRefineResult newton_refine(const PolySystem& sys, const Vector& x0, int max_iter,
                                 double tol) {
  NewtonRefineResult out;
  Vector x = x0;
  double prev = system_value(sys, x).lpNorm<Eigen::Infinity>();
  out.trace.push_back(prev);
  if (prev <= tol) {
    out.point = x;
    out.converged = true;
    return out;
  }
  int growth_streak = 0;
  for (int it = 0; it < max_iter; ++it) {
    x = newton_step(sys, x);
    const double r = system_value(sys, x).lpNorm<Eigen::Infinity>();
    out.trace.push_back(r);
    if (!std::isfinite(r)) {
      out.diverged = true;
      break;
    }
    if (r <= tol) {
      out.converged = true;
      break;
    }
    growth_streak = r >= 10.0 * prev ? growth_streak + 1 : 0;
    if (growth_streak >= 3) {
      out.diverged = true;
      break;
    }
    prev = r;
  }
  out.point = x;
  return out;
}

PolySystem build_power_flow_system(const CaseData& cd, const FlowMatrices& fm) {
  const Index n = fm.n_bus;
  PolySystem sys;
  sys.dim = 2 * n;
  // Aggregate in-service setpoints per bus.
  std::vector<double> pset(n, 0.0), vset(n, 0.0);
  std::vector<bool> has_gen(n, false);
  for (const auto& g : cd.generators) {
    if (!g.status) continue;
    const Index k = cd.bus_index(g.bus);
    pset[k] += g.Pset;
    if (!has_gen[k]) vset[k] = g.Vset;
    has_gen[k] = true;
  }
  const Index ref = cd.slack_index();
  for (Index k = 0; k < n; ++k) {
    const auto& b = cd.buses[k];
    const bool is_ref = k == ref;
    const bool pv = has_gen[k] && !is_ref;
    if (is_ref) {
      // angle reference and voltage magnitude setpoint
      sys.equations.push_back(
          QuadraticFunction::linear(2 * n, {{n + k, 1.0}}, 0.0));
      const double v = has_gen[k] ? vset[k] : 1.0;
      sys.equations.push_back(QuadraticFunction::from_trace(fm.Mk[k], -v * v));
    } else if (pv) {
      sys.equations.push_back(
          QuadraticFunction::from_trace(fm.Yk[k], -(pset[k] - b.Pd)));
      sys.equations.push_back(QuadraticFunction::from_trace(fm.Mk[k], -vset[k] * vset[k]));
    } else {
      sys.equations.push_back(QuadraticFunction::from_trace(fm.Yk[k], b.Pd));
      sys.equations.push_back(QuadraticFunction::from_trace(fm.Ybar_k[k], b.Qd));
    }
  }
  return sys;
}

namespace {

// min ||chi - target||_p s.t. the unslacked constraints, via the local NLP.
NlpResult least_squares_projection(const PopProblem& unslacked, const Vector& target,
                                   NormKind norm, const NlpOptions& opts) {
  const Index n = unslacked.dim();
  if (norm == NormKind::l2) {
    PopProblem prob = unslacked;
    QuadraticFunction f = QuadraticFunction::zero(n);
    for (Index i = 0; i < n; ++i) {
      f.Q.coeffRef(i, i) = 1.0;
      if (target[i] != 0.0) f.c.coeffRef(i) = -2.0 * target[i];
    }
    f.d = target.squaredNorm();
    prob.objective = f;
    return solve_nlp(prob, target, opts);
  }
  // l1 / linf epigraph over the deviations.
  PopProblem prob = unslacked;
  const Index extra = norm == NormKind::l1 ? n : 1;
  const Index N = n + extra;
  prob.layout.total = N;
  for (Index i = 0; i < extra; ++i)
    prob.layout.names.push_back("proj_aux[" + std::to_string(i) + "]");
  Vector lb = Vector::Constant(N, -std::numeric_limits<double>::infinity());
  lb.head(n) = unslacked.lower_bounds;
  lb.tail(extra).setZero();
  prob.lower_bounds = lb;
  auto widen = [&](QuadraticFunction f) {
    f.Q.conservativeResize(N, N);
    f.c.conservativeResize(N);
    return f;
  };
  for (auto& c : prob.constraints) c.f = widen(c.f);
  QuadraticFunction objf = QuadraticFunction::zero(N);
  for (Index i = 0; i < n; ++i) {
    const Index aux = norm == NormKind::l1 ? n + i : n;
    prob.constraints.push_back(
        {QuadraticFunction::linear(N, {{i, 1.0}, {aux, -1.0}}, -target[i]), Sense::le,
         "proj_up[" + std::to_string(i) + "]"});
    prob.constraints.push_back(
        {QuadraticFunction::linear(N, {{i, -1.0}, {aux, -1.0}}, target[i]), Sense::le,
         "proj_dn[" + std::to_string(i) + "]"});
  }
  if (norm == NormKind::l1)
    for (Index i = 0; i < n; ++i) objf.c.coeffRef(n + i) = 1.0;
  else
    objf.c.coeffRef(n) = 1.0;
  prob.objective = objf;
  Vector start = Vector::Zero(N);
  start.head(n) = target;
  NlpResult r = solve_nlp(prob, start, opts);
  r.point = r.point.head(n).eval();
  return r;
}

}  // namespace

Stage3Result project_stage3(const PopProblem& unslacked, const CaseData& cd,
                            const FlowMatrices& fm, const Vector& chi_tilde,
                            Stage3Mode mode, NormKind norm, const NlpOptions& opts,
                            double feasibility_tol, int newton_max_iter) {
  if (chi_tilde.size() != unslacked.dim())
    throw DimensionMismatch("chi_tilde must match the unslacked layout");
  Stage3Result out;
  const Evaluation ev0 = evaluate(unslacked, chi_tilde);
  if (ev0.max_violation <= feasibility_tol) {
    out.success = true;
    out.point = chi_tilde;
    out.objective = ev0.objective;
    out.max_violation = ev0.max_violation;
    out.distance = 0;
    out.status = "already_feasible";
    return out;
  }

  if (mode == Stage3Mode::power_flow) {
    const PolySystem sys = build_power_flow_system(cd, fm);
    Vector x0 = chi_tilde.head(2 * fm.n_bus);
    if (x0.head(fm.n_bus).norm() < 1e-6) x0.head(fm.n_bus).setOnes();
    NewtonRefineResult nr;
    bool threw = false;
    try {
      nr = newton_refine(sys, x0, newton_max_iter, 1e-10);
    } catch (const NonFiniteEncountered&) {
      threw = true;
    }
    if (!threw && nr.converged) {
      const Vector chi = chi_from_voltage(unslacked, cd, fm, nr.point);
      const Evaluation ev = evaluate(unslacked, chi);
      out.success = true;
      out.point = chi;
      out.objective = ev.objective;
      out.max_violation = ev.max_violation;
      out.distance = (chi - chi_tilde).norm();
      out.status = ev.max_violation <= feasibility_tol ? "pf_refined"
                                                       : "pf_refined_violations";
      out.certificate = alpha_test(sys, nr.point);
      out.has_certificate = true;
      return out;
    }
    // Newton failed: fall back to the smooth projection.
    const std::string why = threw ? "non_finite" : (nr.diverged ? "diverged" : "max_iter");
    NlpResult ls = least_squares_projection(unslacked, chi_tilde, NormKind::l2, opts);
    const Evaluation ev = evaluate(unslacked, ls.point);
    out.point = ls.point;
    out.objective = ev.objective;
    out.max_violation = ev.max_violation;
    out.distance = (ls.point - chi_tilde).norm();
    out.success = ls.status == NlpStatus::optimal_local &&
                  ev.max_violation <= feasibility_tol;
    out.status = "newton_" + why + ";ls_" + nlp_status_name(ls.status);
    try {
      out.certificate = alpha_test(sys, x0);
      out.has_certificate = true;
    } catch (const NonFiniteEncountered&) {
    }
    return out;
  }

  NlpResult ls = least_squares_projection(unslacked, chi_tilde, norm, opts);
  const Evaluation ev = evaluate(unslacked, ls.point);
  out.point = ls.point;
  out.objective = ev.objective;
  out.max_violation = ev.max_violation;
  out.distance = (ls.point - chi_tilde).norm();
  out.success =
      ls.status == NlpStatus::optimal_local && ev.max_violation <= feasibility_tol;
  out.status = std::string("ls_") + nlp_status_name(ls.status);
  return out;
}

}  // namespace feasproj
