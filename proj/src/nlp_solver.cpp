#include "feasproj/nlp_solver.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace feasproj {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Constraint in normalized form: eq h(z) = 0 or ineq g(z) <= 0 (ge rows are
// negated), with precomputed sparse structure.
struct Row {
  bool is_eq = false;
  double sign = 1.0;  // original f = sign * normalized form
  std::vector<std::array<Index, 2>> q_idx;
  std::vector<double> q_val;
  std::vector<Index> c_idx;
  std::vector<double> c_val;
  double d = 0;
  std::vector<Index> support;

  double value(const Vector& z) const {
    double acc = d;
    for (size_t e = 0; e < q_val.size(); ++e)
      acc += q_val[e] * z[q_idx[e][0]] * z[q_idx[e][1]];
    for (size_t e = 0; e < c_val.size(); ++e) acc += c_val[e] * z[c_idx[e]];
    return acc;
  }
  // grad over support only; scratch must be zero on support beforehand.
  void gradient_on(const Vector& z, Vector& scratch) const {
    for (size_t e = 0; e < q_val.size(); ++e)
      scratch[q_idx[e][0]] += 2.0 * q_val[e] * z[q_idx[e][1]];
    for (size_t e = 0; e < c_val.size(); ++e) scratch[c_idx[e]] += c_val[e];
  }
};

Row compile_row(const QuadraticFunction& f, double sign) {
  Row r;
  r.sign = sign;
  for (int k = 0; k < f.Q.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(f.Q, k); it; ++it) {
      r.q_idx.push_back({it.row(), it.col()});
      r.q_val.push_back(sign * it.value());
    }
  for (SparseVector::InnerIterator it(f.c); it; ++it) {
    r.c_idx.push_back(it.index());
    r.c_val.push_back(sign * it.value());
  }
  r.d = sign * f.d;
  r.support = f.support();
  return r;
}

}  // namespace

const char* nlp_status_name(NlpStatus s) {
  switch (s) {
    case NlpStatus::optimal_local: return "optimal_local";
    case NlpStatus::max_iterations: return "max_iterations";
    case NlpStatus::infeasible_local: return "infeasible_local";
    case NlpStatus::numerical_failure: return "numerical_failure";
  }
  return "?";
}

NlpResult solve_nlp(const PopProblem& pop, const Vector& x0, const NlpOptions& opts) {
  const Index n = pop.dim();
  if (x0.size() != n) throw DimensionMismatch("start point dimension mismatch");
  if (!x0.allFinite()) throw NonFiniteEncountered("non-finite start point");
  if (opts.feasibility_tol <= 0 || opts.optimality_tol <= 0 || opts.penalty_growth <= 1 ||
      opts.initial_penalty <= 0)
    throw std::invalid_argument("invalid solver options");

  std::vector<Row> rows;
  rows.reserve(pop.constraints.size());
  for (const auto& c : pop.constraints) {
    const double sign = c.sense == Sense::ge ? -1.0 : 1.0;
    Row r = compile_row(c.f, sign);
    r.is_eq = c.sense == Sense::eq;
    rows.push_back(std::move(r));
  }
  const Row obj = compile_row(pop.objective, 1.0);
  const Vector& lb = pop.lower_bounds;

  auto project = [&](Vector& z) {
    for (Index i = 0; i < n; ++i)
      if (lb[i] > -kInf && z[i] < lb[i]) z[i] = lb[i];
  };

  Vector z = x0;
  project(z);
  const size_t m = rows.size();
  Vector lambda = Vector::Zero(static_cast<Index>(m));
  double mu = opts.initial_penalty;

  Vector vals(static_cast<Index>(m));
  auto eval_rows = [&](const Vector& at) {
    for (size_t i = 0; i < m; ++i) vals[static_cast<Index>(i)] = rows[i].value(at);
  };
  auto aug_value = [&](const Vector& at) {
    double L = obj.value(at);
    for (size_t i = 0; i < m; ++i) {
      const double v = rows[i].value(at);
      const double li = lambda[static_cast<Index>(i)];
      if (rows[i].is_eq) {
        L += li * v + 0.5 * mu * v * v;
      } else {
        const double q = li + mu * v;
        if (q > 0) L += (q * q - li * li) / (2.0 * mu);
        else L += -li * li / (2.0 * mu);
      }
    }
    return L;
  };
  // weight of each row in the augmented gradient: eq lambda+mu*h, ineq
  // max(0, lambda+mu*g). Requires vals up to date.
  Vector weights(static_cast<Index>(m));
  auto row_weights = [&]() {
    for (size_t i = 0; i < m; ++i) {
      const Index ii = static_cast<Index>(i);
      const double q = lambda[ii] + mu * vals[ii];
      weights[ii] = rows[i].is_eq ? q : std::max(0.0, q);
    }
  };
  Vector grad(n);
  auto aug_gradient = [&](const Vector& at) {
    grad.setZero();
    Vector scratch = Vector::Zero(n);
    obj.gradient_on(at, grad);
    for (size_t i = 0; i < m; ++i) {
      const Index ii = static_cast<Index>(i);
      if (weights[ii] == 0.0) continue;
      for (Index s : rows[i].support) scratch[s] = 0.0;
      rows[i].gradient_on(at, scratch);
      for (Index s : rows[i].support) grad[s] += weights[ii] * scratch[s];
      for (Index s : rows[i].support) scratch[s] = 0.0;
    }
  };
  auto projected_gradient_norm = [&](const Vector& at, const Vector& g) {
    double nrm = 0;
    for (Index i = 0; i < n; ++i) {
      double step = at[i] - g[i];
      if (lb[i] > -kInf && step < lb[i]) step = lb[i];
      nrm = std::max(nrm, std::abs(step - at[i]));
    }
    return nrm;
  };
  auto violation = [&](const Vector& at) {
    double v = 0;
    for (size_t i = 0; i < m; ++i) {
      const double val = rows[i].value(at);
      v = std::max(v, rows[i].is_eq ? std::abs(val) : std::max(0.0, val));
    }
    return v;
  };

  NlpResult res;
  res.point = z;
  int total_inner = 0;
  // forcing-sequence schedule: accept a multiplier step when the violation
  // beats eta, otherwise raise the penalty; both tolerances tighten as the
  // penalty grows
  double inner_tol = std::min(1e-2, 1.0 / std::pow(mu, 0.1));
  double eta = 0.1 / std::pow(mu, 0.1);
  double best_pg = kInf;
  int stagnant = 0;
  bool nonfinite = false;

  Matrix H(n, n);
  Vector scratch = Vector::Zero(n);

  // Stationarity certificate with least-squares multipliers: the KKT test
  // asks whether multipliers exist, and the first-order estimates chatter on
  // degenerate active sets. Negative inequality multipliers are clipped, so
  // the residual can only over-state the true one.
  auto ls_stationarity = [&](const Vector& at) {
    eval_rows(at);
    Vector g0 = Vector::Zero(n);
    obj.gradient_on(at, g0);
    std::vector<Index> cols;  // active rows
    for (size_t i = 0; i < m; ++i) {
      const Index ii = static_cast<Index>(i);
      if (rows[i].is_eq || std::abs(vals[ii]) <= 1e-6) cols.push_back(ii);
    }
    std::vector<Index> bcols;
    for (Index i = 0; i < n; ++i)
      if (lb[i] > -kInf && at[i] <= lb[i] + 1e-8) bcols.push_back(i);
    const Index k = static_cast<Index>(cols.size() + bcols.size());
    if (k == 0) return g0.lpNorm<Eigen::Infinity>();
    Matrix A = Matrix::Zero(n, k);
    Vector scratch3 = Vector::Zero(n);
    for (size_t a = 0; a < cols.size(); ++a) {
      const auto& r = rows[cols[a]];
      for (Index s : r.support) scratch3[s] = 0.0;
      r.gradient_on(at, scratch3);
      for (Index s : r.support) A(s, static_cast<Index>(a)) = scratch3[s];
      for (Index s : r.support) scratch3[s] = 0.0;
    }
    for (size_t b2 = 0; b2 < bcols.size(); ++b2)
      A(bcols[b2], static_cast<Index>(cols.size() + b2)) = -1.0;
    Vector nu = Eigen::CompleteOrthogonalDecomposition<Matrix>(A).solve(-g0);
    for (size_t a = 0; a < cols.size(); ++a)
      if (!rows[cols[a]].is_eq && nu[static_cast<Index>(a)] < 0)
        nu[static_cast<Index>(a)] = 0;
    for (size_t b2 = 0; b2 < bcols.size(); ++b2)
      if (nu[static_cast<Index>(cols.size() + b2)] < 0)
        nu[static_cast<Index>(cols.size() + b2)] = 0;
    return (g0 + A * nu).lpNorm<Eigen::Infinity>();
  };


  for (int outer = 0; outer < opts.max_outer_iterations && !nonfinite; ++outer) {
    // ---- inner: damped projected Newton on the augmented Lagrangian ----
    for (int inner = 0; inner < opts.max_inner_iterations; ++inner) {
      ++total_inner;
      eval_rows(z);
      if (!vals.allFinite()) { nonfinite = true; break; }
      row_weights();
      aug_gradient(z);
      if (!grad.allFinite()) { nonfinite = true; break; }
      if (projected_gradient_norm(z, grad) <= inner_tol) break;

      // Active lower bounds with outward gradient stay fixed.
      std::vector<Index> free;
      free.reserve(n);
      for (Index i = 0; i < n; ++i) {
        const bool active = lb[i] > -kInf && z[i] <= lb[i] + 1e-12 && grad[i] > 0;
        if (!active) free.push_back(i);
      }
      if (free.empty()) break;

      H.setZero();
      for (size_t e = 0; e < obj.q_val.size(); ++e)
        H(obj.q_idx[e][0], obj.q_idx[e][1]) += 2.0 * obj.q_val[e];
      for (size_t i = 0; i < m; ++i) {
        const Index ii = static_cast<Index>(i);
        const double w = weights[ii];
        const bool curved = rows[i].is_eq || w > 0;
        if (!curved) continue;
        if (w != 0.0)
          for (size_t e = 0; e < rows[i].q_val.size(); ++e)
            H(rows[i].q_idx[e][0], rows[i].q_idx[e][1]) += 2.0 * w * rows[i].q_val[e];
        for (Index s : rows[i].support) scratch[s] = 0.0;
        rows[i].gradient_on(z, scratch);
        for (Index a : rows[i].support)
          for (Index b : rows[i].support) H(a, b) += mu * scratch[a] * scratch[b];
        for (Index s : rows[i].support) scratch[s] = 0.0;
      }

      const Index nf = static_cast<Index>(free.size());
      Matrix Hf(nf, nf);
      Vector gf(nf);
      for (Index a = 0; a < nf; ++a) {
        gf[a] = grad[free[a]];
        for (Index b = 0; b < nf; ++b) Hf(a, b) = H(free[a], free[b]);
      }
      double damp = 0.0;
      const double scale = std::max(1.0, Hf.diagonal().cwiseAbs().maxCoeff());
      Vector pf;
      for (int attempt = 0; attempt < 12; ++attempt) {
        Matrix Hd = Hf;
        if (damp > 0) Hd.diagonal().array() += damp;
        Eigen::LDLT<Matrix> ldlt(Hd);
        pf = ldlt.solve(-gf);
        const bool descent =
            pf.allFinite() && gf.dot(pf) <= -1e-12 * gf.norm() * pf.norm();
        if (ldlt.info() == Eigen::Success && descent && ldlt.isPositive()) break;
        damp = damp == 0 ? 1e-8 * scale : damp * 20.0;
        pf.setZero();
      }
      if (!pf.allFinite() || pf.isZero(0.0)) pf = -gf;  // damped fallback failed

      Vector p = Vector::Zero(n);
      for (Index a = 0; a < nf; ++a) p[free[a]] = pf[a];
      const double L0 = aug_value(z);
      if (!std::isfinite(L0)) { nonfinite = true; break; }
      double alpha = 1.0;
      bool accepted = false;
      for (int ls = 0; ls < 50; ++ls) {
        Vector zt = z + alpha * p;
        project(zt);
        const double Lt = aug_value(zt);
        const double pred = grad.dot(zt - z);
        if (std::isfinite(Lt) && Lt <= L0 + 1e-4 * pred) {
          z = zt;
          accepted = true;
          break;
        }
        alpha *= 0.5;
        if (alpha < 1e-14) break;
      }
      if (!accepted) break;  // stalled; let the outer loop react
    }
    if (nonfinite) break;

    const double viol = violation(z);
    res.trace.push_back({outer, obj.value(z), viol, mu});

    if (viol <= std::max(0.1 * opts.feasibility_tol, eta)) {
      // first-order multiplier update
      eval_rows(z);
      for (size_t i = 0; i < m; ++i) {
        const Index ii = static_cast<Index>(i);
        const double q = lambda[ii] + mu * vals[ii];
        lambda[ii] = rows[i].is_eq ? q : std::max(0.0, q);
        lambda[ii] = std::clamp(lambda[ii], -opts.multiplier_cap, opts.multiplier_cap);
      }
      // KKT check: after the update the augmented gradient equals the plain
      // Lagrangian gradient at the new multipliers.
      eval_rows(z);
      row_weights();
      aug_gradient(z);
      double pg = projected_gradient_norm(z, grad);
      if (viol <= opts.feasibility_tol && pg > opts.optimality_tol && pg <= 1e-2)
        pg = std::min(pg, ls_stationarity(z));
      if (viol <= opts.feasibility_tol && pg <= opts.optimality_tol) {
        res.status = NlpStatus::optimal_local;
        res.point = z;
        res.objective = obj.value(z);
        res.max_violation = viol;
        res.stationarity = pg;
        res.iterations = total_inner;
        res.multipliers.resize(static_cast<Index>(m));
        for (size_t i = 0; i < m; ++i)
          res.multipliers[static_cast<Index>(i)] =
              rows[i].sign * lambda[static_cast<Index>(i)];
        return res;
      }
      if (pg < best_pg * 0.9) {
        best_pg = pg;
        stagnant = 0;
      } else if (viol <= opts.feasibility_tol && ++stagnant >= 8) {
        break;  // multiplier iteration has flatlined; finish honestly
      }
      eta = std::max(0.02 * opts.feasibility_tol, eta / std::pow(mu, 0.9));
      inner_tol = std::max(0.5 * opts.optimality_tol, inner_tol / mu);
    } else {
      mu *= opts.penalty_growth;
      eta = std::max(0.02 * opts.feasibility_tol, 0.1 / std::pow(mu, 0.1));
      inner_tol = std::max(0.5 * opts.optimality_tol, 1.0 / std::pow(mu, 0.1));
      if (mu > opts.penalty_cap) {
        if (viol > opts.feasibility_tol) {
          res.status = NlpStatus::infeasible_local;
          break;
        }
        mu = opts.penalty_cap;
      }
    }
  }

  // Endgame polish: when the iterate is nearly feasible, project it back
  // onto the active-constraint manifold with a few minimum-norm Newton
  // steps; degenerate active sets otherwise leave an O(tol) residue.
  if (!nonfinite && violation(z) <= 1e-3) {
    Vector zp = z;
    for (int step = 0; step < 8; ++step) {
      eval_rows(zp);
      std::vector<size_t> active;
      for (size_t i = 0; i < m; ++i) {
        const Index ii = static_cast<Index>(i);
        if (rows[i].is_eq || vals[ii] > -1e-9) active.push_back(i);
      }
      std::vector<Index> pinned;
      for (Index i = 0; i < n; ++i)
        if (lb[i] > -kInf && zp[i] <= lb[i] + 1e-9) pinned.push_back(i);
      Vector rvec(static_cast<Index>(active.size()) + static_cast<Index>(pinned.size()));
      Matrix J(rvec.size(), n);
      J.setZero();
      Vector scratch2 = Vector::Zero(n);
      for (size_t a = 0; a < active.size(); ++a) {
        const auto& r = rows[active[a]];
        rvec[static_cast<Index>(a)] =
            r.is_eq ? vals[static_cast<Index>(active[a])]
                    : std::max(0.0, vals[static_cast<Index>(active[a])]);
        for (Index s : r.support) scratch2[s] = 0.0;
        r.gradient_on(zp, scratch2);
        for (Index s : r.support) J(static_cast<Index>(a), s) = scratch2[s];
        for (Index s : r.support) scratch2[s] = 0.0;
      }
      for (size_t b = 0; b < pinned.size(); ++b) {
        const Index row_i = static_cast<Index>(active.size() + b);
        rvec[row_i] = zp[pinned[b]] - lb[pinned[b]];
        J(row_i, pinned[b]) = 1.0;
      }
      if (rvec.lpNorm<Eigen::Infinity>() <= 1e-12) break;
      const Eigen::CompleteOrthogonalDecomposition<Matrix> cod(J);
      const Vector dz = cod.solve(rvec);
      if (!dz.allFinite() || dz.norm() > 1.0) break;
      zp -= dz;
      project(zp);
    }
    if (violation(zp) <= violation(z) && std::isfinite(obj.value(zp))) z = zp;
  }

  eval_rows(z);
  row_weights();
  aug_gradient(z);
  res.point = z;
  res.objective = obj.value(z);
  res.max_violation = violation(z);
  res.stationarity = grad.allFinite() ? projected_gradient_norm(z, grad) : kInf;
  if (!nonfinite && res.max_violation <= opts.feasibility_tol &&
      res.stationarity > opts.optimality_tol && res.stationarity <= 1e-2)
    res.stationarity = std::min(res.stationarity, ls_stationarity(z));
  res.iterations = total_inner;
  res.multipliers.resize(static_cast<Index>(m));
  for (size_t i = 0; i < m; ++i)
    res.multipliers[static_cast<Index>(i)] = rows[i].sign * lambda[static_cast<Index>(i)];
  if (nonfinite)
    res.status = NlpStatus::numerical_failure;
  else if (res.status == NlpStatus::infeasible_local && res.max_violation <= opts.feasibility_tol)
    res.status = res.stationarity <= opts.optimality_tol ? NlpStatus::optimal_local
                                                         : NlpStatus::max_iterations;
  else if (res.status != NlpStatus::infeasible_local) {
    res.status = res.max_violation <= opts.feasibility_tol &&
                         res.stationarity <= opts.optimality_tol
                     ? NlpStatus::optimal_local
                     : NlpStatus::max_iterations;
  }
  return res;
}

}  // namespace feasproj
