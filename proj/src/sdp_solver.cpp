#include "feasproj/sdp_solver.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>

namespace feasproj {

int SdpProblem::add_block(BlockKind kind, Index size) {
  blocks.push_back({kind, size});
  return static_cast<int>(blocks.size()) - 1;
}

void SdpProblem::add_entry(std::vector<SdpEntry>& list, int block, Index r, Index c,
                           double v) {
  if (v == 0.0) return;
  list.push_back({block, r, c, v});
  if (r != c) list.push_back({block, c, r, v});
}

void SdpProblem::add_objective(int block, Index r, Index c, double v) {
  add_entry(objective, block, r, c, v);
}

const char* sdp_status_name(SdpStatus s) {
  switch (s) {
    case SdpStatus::optimal: return "optimal";
    case SdpStatus::near_optimal: return "near_optimal";
    case SdpStatus::infeasible_certificate: return "infeasible_certificate";
    case SdpStatus::unbounded_certificate: return "unbounded_certificate";
    case SdpStatus::numerical_failure: return "numerical_failure";
  }
  return "?";
}

void dump_problem(const SdpProblem& p, std::ostream& os) {
  os << "sdp " << p.blocks.size() << " " << p.rows.size() << "\n";
  for (size_t b = 0; b < p.blocks.size(); ++b)
    os << "block " << b << " " << (p.blocks[b].kind == BlockKind::psd ? "psd" : "nonneg")
       << " " << p.blocks[b].size << "\n";
  for (const auto& e : p.objective)
    os << "obj " << e.block << " " << e.row << " " << e.col << " " << e.value << "\n";
  for (size_t i = 0; i < p.rows.size(); ++i) {
    os << "row " << i << " " << p.rows[i].rhs << "\n";
    for (const auto& e : p.rows[i].entries)
      os << "a " << i << " " << e.block << " " << e.row << " " << e.col << " " << e.value
         << "\n";
  }
}

namespace {

struct BlockState {
  BlockKind kind;
  Index n;
  Matrix X, S;       // psd blocks
  Vector xd, sd;     // nonneg blocks (diagonals)
  Matrix Sinv;       // psd
  Vector sinv_d;     // nonneg
};

double dot_entries(const std::vector<SdpEntry>& es, const std::vector<BlockState>& st,
                   bool use_S) {
  double acc = 0;
  for (const auto& e : es) {
    const auto& b = st[e.block];
    if (b.kind == BlockKind::psd)
      acc += e.value * (use_S ? b.S(e.row, e.col) : b.X(e.row, e.col));
    else if (e.row == e.col)
      acc += e.value * (use_S ? b.sd[e.row] : b.xd[e.row]);
  }
  return acc;
}

double norm_entries(const std::vector<SdpEntry>& es) {
  double acc = 0;
  for (const auto& e : es) acc += e.value * e.value;
  return std::sqrt(acc);
}

// Largest alpha in (0, 1] keeping M + alpha dM positive definite, scaled by
// fraction-to-boundary tau.
double psd_step(const Matrix& M, const Matrix& dM, double tau) {
  Eigen::LLT<Matrix> llt(M);
  Matrix L;
  if (llt.info() == Eigen::Success) {
    L = llt.matrixL();
  } else {
    Matrix Mr = M;
    Mr.diagonal().array() += 1e-12 * std::max(1.0, M.diagonal().maxCoeff());
    Eigen::LLT<Matrix> llt2(Mr);
    if (llt2.info() != Eigen::Success) return 0.0;
    L = llt2.matrixL();
  }
  const Matrix W = L.template triangularView<Eigen::Lower>().solve(
      L.template triangularView<Eigen::Lower>().solve(dM).transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (W + W.transpose()),
                                           Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff();
  if (lmin >= 0) return 1.0;
  return std::min(1.0, -tau / lmin);
}

double diag_step(const Vector& x, const Vector& dx, double tau) {
  double a = 1.0;
  for (Index i = 0; i < x.size(); ++i)
    if (dx[i] < 0) a = std::min(a, -tau * x[i] / dx[i]);
  return a;
}

}  // namespace

SdpSolution solve_sdp(const SdpProblem& prob_in, double tol) {
  if (prob_in.blocks.empty()) throw SdpError("no blocks");
  for (const auto& b : prob_in.blocks)
    if (b.size < 1) throw SdpError("empty block");
  if (prob_in.rows.empty()) throw SdpError("no constraints");

  // ---- presolve: row scaling, zero and dependent row removal ----
  SdpSolution sol;
  std::vector<int> keep;
  std::vector<double> scale;
  std::vector<SdpConstraint> rows;
  for (size_t i = 0; i < prob_in.rows.size(); ++i) {
    const double nrm = norm_entries(prob_in.rows[i].entries);
    if (nrm < 1e-14) {
      if (std::abs(prob_in.rows[i].rhs) > 1e-10) {
        sol.status = SdpStatus::infeasible_certificate;
        sol.presolve_removed.push_back(static_cast<int>(i));
        return sol;
      }
      sol.presolve_removed.push_back(static_cast<int>(i));
      continue;
    }
    keep.push_back(static_cast<int>(i));
    SdpConstraint c = prob_in.rows[i];
    for (auto& e : c.entries) e.value /= nrm;
    c.rhs /= nrm;
    rows.push_back(std::move(c));
    scale.push_back(nrm);
  }
  const Index m0 = static_cast<Index>(rows.size());
  // Gram-based dependent-row detection at moderate sizes: the pivot columns
  // of a rank-revealing QR of the Gram matrix select an independent subset.
  if (m0 <= 1500) {
    Matrix G(m0, m0);
    for (Index i = 0; i < m0; ++i) {
      for (Index j = i; j < m0; ++j) {
        double acc = 0;
        for (const auto& ei : rows[i].entries)
          for (const auto& ej : rows[j].entries)
            if (ei.block == ej.block && ei.row == ej.row && ei.col == ej.col)
              acc += ei.value * ej.value;
        G(i, j) = G(j, i) = acc;
      }
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(G);
    qr.setThreshold(1e-10);
    const Index rank = qr.rank();
    if (rank < m0) {
      std::vector<bool> dependent(m0, true);
      const auto& perm = qr.colsPermutation().indices();
      for (Index k = 0; k < rank; ++k) dependent[perm[k]] = false;
      std::vector<SdpConstraint> kept_rows;
      std::vector<double> kept_scale;
      std::vector<int> kept_keep;
      for (Index i = 0; i < m0; ++i) {
        if (dependent[i]) {
          sol.presolve_removed.push_back(keep[i]);
        } else {
          kept_rows.push_back(std::move(rows[i]));
          kept_scale.push_back(scale[i]);
          kept_keep.push_back(keep[i]);
        }
      }
      rows = std::move(kept_rows);
      scale = std::move(kept_scale);
      keep = std::move(kept_keep);
    }
  }
  const Index m = static_cast<Index>(rows.size());
  if (m == 0) throw SdpError("all constraints removed in presolve");

  Vector b(m);
  for (Index i = 0; i < m; ++i) b[i] = rows[i].rhs;

  // ---- state ----
  std::vector<BlockState> st(prob_in.blocks.size());
  Index ntot = 0;
  for (size_t bi = 0; bi < prob_in.blocks.size(); ++bi) {
    st[bi].kind = prob_in.blocks[bi].kind;
    st[bi].n = prob_in.blocks[bi].size;
    ntot += st[bi].n;
  }
  // objective per block, dense
  std::vector<Matrix> C(st.size());
  std::vector<Vector> Cd(st.size());
  double cnorm = 0;
  for (size_t bi = 0; bi < st.size(); ++bi) {
    if (st[bi].kind == BlockKind::psd)
      C[bi] = Matrix::Zero(st[bi].n, st[bi].n);
    else
      Cd[bi] = Vector::Zero(st[bi].n);
  }
  for (const auto& e : prob_in.objective) {
    if (st[e.block].kind == BlockKind::psd)
      C[e.block](e.row, e.col) += e.value;
    else if (e.row == e.col)
      Cd[e.block][e.row] += e.value;
  }
  for (size_t bi = 0; bi < st.size(); ++bi)
    cnorm += st[bi].kind == BlockKind::psd ? C[bi].squaredNorm() : Cd[bi].squaredNorm();
  cnorm = std::sqrt(cnorm);

  const double bmax = m > 0 ? b.cwiseAbs().maxCoeff() : 0.0;
  const double tau_p = std::max(10.0, 5.0 * (1.0 + bmax));
  const double tau_d = std::max(10.0, 1.0 + cnorm);
  for (auto& s : st) {
    if (s.kind == BlockKind::psd) {
      s.X = tau_p * Matrix::Identity(s.n, s.n);
      s.S = tau_d * Matrix::Identity(s.n, s.n);
    } else {
      s.xd = tau_p * Vector::Ones(s.n);
      s.sd = tau_d * Vector::Ones(s.n);
    }
  }
  Vector y = Vector::Zero(m);

  auto primal_obj = [&]() {
    double acc = 0;
    for (size_t bi = 0; bi < st.size(); ++bi)
      acc += st[bi].kind == BlockKind::psd ? (C[bi].array() * st[bi].X.array()).sum()
                                           : Cd[bi].dot(st[bi].xd);
    return acc;
  };
  auto mu_of = [&]() {
    double acc = 0;
    for (const auto& s : st)
      acc += s.kind == BlockKind::psd ? (s.X.array() * s.S.array()).sum()
                                      : s.xd.dot(s.sd);
    return acc / static_cast<double>(ntot);
  };

  // residuals
  Vector rp(m);
  std::vector<Matrix> Rd(st.size());
  std::vector<Vector> Rdd(st.size());
  auto compute_residuals = [&]() {
    for (Index i = 0; i < m; ++i) rp[i] = b[i] - dot_entries(rows[i].entries, st, false);
    for (size_t bi = 0; bi < st.size(); ++bi) {
      if (st[bi].kind == BlockKind::psd)
        Rd[bi] = C[bi] - st[bi].S;
      else
        Rdd[bi] = Cd[bi] - st[bi].sd;
    }
    for (Index i = 0; i < m; ++i)
      for (const auto& e : rows[i].entries) {
        if (st[e.block].kind == BlockKind::psd)
          Rd[e.block](e.row, e.col) -= y[i] * e.value;
        else if (e.row == e.col)
          Rdd[e.block][e.row] -= y[i] * e.value;
      }
  };
  auto dual_resid_norm = [&]() {
    double acc = 0;
    for (size_t bi = 0; bi < st.size(); ++bi)
      acc += st[bi].kind == BlockKind::psd ? Rd[bi].squaredNorm() : Rdd[bi].squaredNorm();
    return std::sqrt(acc) / (1.0 + cnorm);
  };

  const int max_iter = 150;
  std::vector<Matrix> dX(st.size()), dS(st.size()), Vj(st.size());
  std::vector<Vector> dxd(st.size()), dsd(st.size());
  std::vector<Matrix> dXa(st.size()), dSa(st.size());
  std::vector<Vector> dxda(st.size()), dsda(st.size());
  Matrix M(m, m);
  Vector rhs(m), dy(m), dy_aff(m);
  double best_gap = std::numeric_limits<double>::infinity();
  int stall = 0;

  for (int iter = 0; iter < max_iter; ++iter) {
    compute_residuals();
    const double mu = mu_of();
    const double p = primal_obj();
    const double d = b.dot(y);
    const double gap_rel = std::abs(p - d) / (1.0 + std::abs(p) + std::abs(d));
    const double pinf = rp.norm() / (1.0 + b.norm());
    const double dinf = dual_resid_norm();
    sol.iterations = iter;
    sol.primal_objective = p;
    sol.dual_objective = d;
    sol.gap = gap_rel;
    sol.primal_residual = pinf;
    sol.dual_residual = dinf;

    if (gap_rel <= tol && pinf <= tol && dinf <= tol) {
      sol.status = SdpStatus::optimal;
      break;
    }
    // Infeasibility heuristics: exploding dual ray with positive b^T y means
    // primal infeasible; exploding primal with falling objective means
    // unbounded.
    const double ynorm = y.lpNorm<Eigen::Infinity>();
    if (ynorm > 1e9 && d > 1e6 * (1.0 + bmax) && dinf * ynorm < 1e-2 * d) {
      sol.status = SdpStatus::infeasible_certificate;
      break;
    }
    double xnorm = 0;
    for (const auto& s : st)
      xnorm = std::max(xnorm, s.kind == BlockKind::psd
                                  ? s.X.diagonal().maxCoeff()
                                  : (s.n > 0 ? s.xd.maxCoeff() : 0.0));
    if (xnorm > 1e10 && p < -1e8 * (1.0 + cnorm)) {
      sol.status = SdpStatus::unbounded_certificate;
      break;
    }
    if (gap_rel < best_gap * 0.999) {
      best_gap = gap_rel;
      stall = 0;
    } else if (++stall > 20) {
      break;  // no further progress
    }

    // ---- S inverses ----
    bool ok = true;
    for (auto& s : st) {
      if (s.kind == BlockKind::psd) {
        Eigen::LLT<Matrix> llt(s.S);
        if (llt.info() != Eigen::Success) { ok = false; break; }
        s.Sinv = llt.solve(Matrix::Identity(s.n, s.n));
      } else {
        s.sinv_d = s.sd.cwiseInverse();
      }
    }
    if (!ok) break;

    // ---- Schur complement M_ij = tr(A_i X A_j S^-1) ----
    M.setZero();
    for (Index j = 0; j < m; ++j) {
      for (auto& v : Vj) v.resize(0, 0);
      std::vector<Vector> vd(st.size());
      for (const auto& e : rows[j].entries) {
        auto& s = st[e.block];
        if (s.kind == BlockKind::psd) {
          if (Vj[e.block].size() == 0) Vj[e.block] = Matrix::Zero(s.n, s.n);
          Vj[e.block].noalias() += e.value * s.X.col(e.row) * s.Sinv.row(e.col);
        } else if (e.row == e.col) {
          if (vd[e.block].size() == 0) vd[e.block] = Vector::Zero(s.n);
          vd[e.block][e.row] += e.value * s.xd[e.row] * s.sinv_d[e.row];
        }
      }
      for (Index i = 0; i < m; ++i) {
        double acc = 0;
        for (const auto& e : rows[i].entries) {
          if (st[e.block].kind == BlockKind::psd) {
            if (Vj[e.block].size() > 0) acc += e.value * Vj[e.block](e.row, e.col);
          } else if (e.row == e.col && vd[e.block].size() > 0) {
            acc += e.value * vd[e.block][e.row];
          }
        }
        M(i, j) = acc;
      }
    }
    M = 0.5 * (M + M.transpose().eval());
    const double mscale = std::max(1.0, M.diagonal().maxCoeff());
    Eigen::LLT<Matrix> mllt(M);
    if (mllt.info() != Eigen::Success) {
      double reg = 1e-12 * mscale;
      for (int attempt = 0;; ++attempt) {
        Matrix Mr = M;
        Mr.diagonal().array() += reg;
        mllt.compute(Mr);
        if (mllt.info() == Eigen::Success) break;
        reg *= 100.0;
        if (attempt >= 6)
          throw LinearAlgebraFailure("Schur complement not factorizable");
      }
    }

    // helper: rhs_i = rp_i - sigma*mu*tr(A_i S^-1) + tr(A_i X) + tr(A_i T S^-1)
    // with T = X Rd (+ corrector term).
    auto build_rhs = [&](double sigma_mu, bool with_corr) {
      std::vector<Matrix> T(st.size());
      std::vector<Vector> Td(st.size());
      for (size_t bi = 0; bi < st.size(); ++bi) {
        auto& s = st[bi];
        if (s.kind == BlockKind::psd) {
          T[bi].noalias() = s.X * Rd[bi];
          if (with_corr) T[bi].noalias() += dXa[bi] * dSa[bi];
          T[bi] = T[bi] * s.Sinv;
        } else {
          Td[bi] = s.xd.cwiseProduct(Rdd[bi]);
          if (with_corr) Td[bi] += dxda[bi].cwiseProduct(dsda[bi]);
          Td[bi] = Td[bi].cwiseProduct(s.sinv_d);
        }
      }
      for (Index i = 0; i < m; ++i) {
        double acc = rp[i];
        for (const auto& e : rows[i].entries) {
          auto& s = st[e.block];
          if (s.kind == BlockKind::psd) {
            acc += e.value * (-sigma_mu * s.Sinv(e.row, e.col) + s.X(e.row, e.col) +
                              T[e.block](e.row, e.col));
          } else if (e.row == e.col) {
            acc += e.value * (-sigma_mu * s.sinv_d[e.row] + s.xd[e.row] + Td[e.block][e.row]);
          }
        }
        rhs[i] = acc;
      }
    };
    // dS = Rd - A*(dy); dX = sigma*mu*S^-1 - X - (X dS + corr) S^-1, symmetrized
    auto build_directions = [&](const Vector& dyv, double sigma_mu, bool with_corr,
                                std::vector<Matrix>& oX, std::vector<Matrix>& oS,
                                std::vector<Vector>& oxd, std::vector<Vector>& osd) {
      for (size_t bi = 0; bi < st.size(); ++bi) {
        auto& s = st[bi];
        if (s.kind == BlockKind::psd) {
          oS[bi] = Rd[bi];
        } else {
          osd[bi] = Rdd[bi];
        }
      }
      for (Index i = 0; i < m; ++i)
        for (const auto& e : rows[i].entries) {
          if (st[e.block].kind == BlockKind::psd)
            oS[e.block](e.row, e.col) -= dyv[i] * e.value;
          else if (e.row == e.col)
            osd[e.block][e.row] -= dyv[i] * e.value;
        }
      for (size_t bi = 0; bi < st.size(); ++bi) {
        auto& s = st[bi];
        if (s.kind == BlockKind::psd) {
          Matrix T = s.X * oS[bi];
          if (with_corr) T.noalias() += dXa[bi] * dSa[bi];
          Matrix D = sigma_mu * s.Sinv - s.X - T * s.Sinv;
          oX[bi] = 0.5 * (D + D.transpose().eval());
        } else {
          Vector T = s.xd.cwiseProduct(osd[bi]);
          if (with_corr) T += dxda[bi].cwiseProduct(dsda[bi]);
          oxd[bi] = sigma_mu * s.sinv_d - s.xd - T.cwiseProduct(s.sinv_d);
        }
      }
    };
    auto step_lengths = [&](const std::vector<Matrix>& oX, const std::vector<Matrix>& oS,
                            const std::vector<Vector>& oxd, const std::vector<Vector>& osd,
                            double tau, double* ap, double* ad) {
      *ap = 1.0;
      *ad = 1.0;
      for (size_t bi = 0; bi < st.size(); ++bi) {
        const auto& s = st[bi];
        if (s.kind == BlockKind::psd) {
          *ap = std::min(*ap, psd_step(s.X, oX[bi], tau));
          *ad = std::min(*ad, psd_step(s.S, oS[bi], tau));
        } else {
          *ap = std::min(*ap, diag_step(s.xd, oxd[bi], tau));
          *ad = std::min(*ad, diag_step(s.sd, osd[bi], tau));
        }
      }
    };

    const double tau_frac = mu < 1e-5 ? 0.98 : 0.9;

    // predictor
    build_rhs(0.0, false);
    dy_aff = mllt.solve(rhs);
    build_directions(dy_aff, 0.0, false, dXa, dSa, dxda, dsda);
    double apa, ada;
    step_lengths(dXa, dSa, dxda, dsda, 1.0, &apa, &ada);
    double ga = 0;
    for (size_t bi = 0; bi < st.size(); ++bi) {
      const auto& s = st[bi];
      if (s.kind == BlockKind::psd)
        ga += ((s.X + apa * dXa[bi]).array() * (s.S + ada * dSa[bi]).array()).sum();
      else
        ga += (s.xd + apa * dxda[bi]).dot(s.sd + ada * dsda[bi]);
    }
    const double mu_aff = std::max(ga / static_cast<double>(ntot), 0.0);
    double sigma = mu > 0 ? std::pow(mu_aff / mu, 3.0) : 0.1;
    sigma = std::clamp(sigma, 1e-8, 1.0);

    // corrector
    build_rhs(sigma * mu, true);
    dy = mllt.solve(rhs);
    build_directions(dy, sigma * mu, true, dX, dS, dxd, dsd);
    double ap, ad;
    step_lengths(dX, dS, dxd, dsd, tau_frac, &ap, &ad);
    if (!std::isfinite(ap) || !std::isfinite(ad) || ap <= 1e-12 || ad <= 1e-12) break;

    for (size_t bi = 0; bi < st.size(); ++bi) {
      auto& s = st[bi];
      if (s.kind == BlockKind::psd) {
        s.X += ap * dX[bi];
        s.S += ad * dS[bi];
      } else {
        s.xd += ap * dxd[bi];
        s.sd += ad * dsd[bi];
      }
    }
    y += ad * dy;
    if (std::getenv("FEASPROJ_SDP_DEBUG"))
      std::fprintf(stderr,
                   "it %3d mu %.3e gap %.3e pinf %.3e dinf %.3e sigma %.2e ap %.2f ad %.2f\n",
                   iter, mu, gap_rel, pinf, dinf, sigma, ap, ad);
  }

  if (sol.status != SdpStatus::optimal &&
      sol.status != SdpStatus::infeasible_certificate &&
      sol.status != SdpStatus::unbounded_certificate) {
    if (sol.gap <= 1e-2 && sol.primal_residual <= 1e-5 && sol.dual_residual <= 1e-5)
      sol.status = SdpStatus::near_optimal;
    else if (sol.iterations >= max_iter - 1 && sol.gap > 1e-2)
      throw IterationLimit("SDP iteration limit without convergence");
    else
      sol.status = SdpStatus::numerical_failure;
  }

  // export solution (unscale dual)
  sol.X.resize(st.size());
  sol.S.resize(st.size());
  for (size_t bi = 0; bi < st.size(); ++bi) {
    if (st[bi].kind == BlockKind::psd) {
      sol.X[bi] = st[bi].X;
      sol.S[bi] = st[bi].S;
    } else {
      sol.X[bi] = st[bi].xd;
      sol.S[bi] = st[bi].sd;
    }
  }
  Vector yfull = Vector::Zero(static_cast<Index>(prob_in.rows.size()));
  for (Index i = 0; i < m; ++i) yfull[keep[i]] = y[i] / scale[i];
  sol.y = yfull;
  return sol;
}

}  // namespace feasproj
