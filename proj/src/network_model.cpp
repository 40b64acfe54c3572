#include "feasproj/network_model.hpp"

#include <cmath>

namespace feasproj {

AdmittanceModel build_admittance(const CaseData& cd) {
  AdmittanceModel adm;
  const Index n = static_cast<Index>(cd.buses.size());
  adm.n_bus = n;
  adm.y = ComplexMatrix::Zero(n, n);
  for (const auto& br : cd.branches) {
    if (!br.status) continue;
    if (br.r * br.r + br.x * br.x <= 0.0)
      throw ZeroImpedanceBranch(br.from, br.to);
    const Index l = cd.bus_index(br.from);
    const Index m = cd.bus_index(br.to);
    const Complex ys = 1.0 / Complex(br.r, br.x);
    const Complex ysh(0.0, br.b_charge / 2.0);
    const Complex t = std::polar(br.tap, br.shift);
    const Complex yff = (ys + ysh) / (br.tap * br.tap);
    const Complex yft = -ys / std::conj(t);
    const Complex ytf = -ys / t;
    const Complex ytt = ys + ysh;
    adm.y(l, l) += yff;
    adm.y(l, m) += yft;
    adm.y(m, l) += ytf;
    adm.y(m, m) += ytt;
    adm.branch_rows.push_back({l, m, yff, yft, br.rateA});
    adm.branch_rows.push_back({m, l, ytt, ytf, br.rateA});
  }
  for (Index k = 0; k < n; ++k)
    adm.y(k, k) += Complex(cd.buses[k].Gs, cd.buses[k].Bs);
  return adm;
}

namespace {

// Assembles the 2N x 2N real form of a complex row operator a (N x N):
//   F    = 1/2 [ Re(a + a^T)   Im(a^T - a) ;  Im(a - a^T)   Re(a + a^T) ]
//   Fbar = -1/2 [ Im(a + a^T)  Re(a - a^T) ;  Re(a^T - a)   Im(a + a^T) ]
// where a is given as a sparse list of (row, col, value) complex entries.
struct ComplexEntries {
  std::vector<Index> row, col;
  std::vector<Complex> val;
  void add(Index r, Index c, Complex v) {
    row.push_back(r);
    col.push_back(c);
    val.push_back(v);
  }
};

void real_forms(const ComplexEntries& a, Index n, SparseMatrix* F,
                SparseMatrix* Fbar) {
  std::vector<Triplet> tf, tb;
  // Entry a_ij contributes v to (i, j) via a and v to (j, i) via a^T;
  // duplicates are summed, so a diagonal entry lands twice on (i, i).
  auto push_sym = [](std::vector<Triplet>& t, Index i, Index j, double v) {
    if (v == 0.0) return;
    t.emplace_back(i, j, v);
    t.emplace_back(j, i, v);
  };
  for (size_t e = 0; e < a.val.size(); ++e) {
    const Index i = a.row[e];
    const Index j = a.col[e];
    const double re = a.val[e].real();
    const double im = a.val[e].imag();
    // Contribution of a_ij to the symmetrized blocks; (a + a^T)/2 picks up
    // half from (i,j) and half from (j,i).
    push_sym(tf, i, j, re / 2.0);
    push_sym(tf, n + i, n + j, re / 2.0);
    push_sym(tb, i, j, -im / 2.0);
    push_sym(tb, n + i, n + j, -im / 2.0);
    // Off-diagonal blocks: F top-right gets Im(a^T - a)/2, i.e. entry (i, j)
    // of the top-right block is (Im(a_ji) - Im(a_ij))/2. Adding entry a_ij
    // contributes -im/2 at (i, n+j) and +im/2 at (j, n+i); symmetry of the
    // whole matrix mirrors them into the bottom-left block.
    if (im != 0.0) {
      tf.emplace_back(i, n + j, -im / 2.0);
      tf.emplace_back(n + j, i, -im / 2.0);
      tf.emplace_back(j, n + i, im / 2.0);
      tf.emplace_back(n + i, j, im / 2.0);
    }
    // Fbar top-right is -Re(a - a^T)/2: a_ij contributes -re/2 at (i, n+j)
    // and +re/2 at (j, n+i).
    if (re != 0.0) {
      tb.emplace_back(i, n + j, -re / 2.0);
      tb.emplace_back(n + j, i, -re / 2.0);
      tb.emplace_back(j, n + i, re / 2.0);
      tb.emplace_back(n + i, j, re / 2.0);
    }
  }
  F->resize(2 * n, 2 * n);
  F->setFromTriplets(tf.begin(), tf.end());
  Fbar->resize(2 * n, 2 * n);
  Fbar->setFromTriplets(tb.begin(), tb.end());
}

}  // namespace

FlowMatrices build_flow_matrices(const AdmittanceModel& adm) {
  FlowMatrices fm;
  const Index n = adm.n_bus;
  fm.n_bus = n;
  fm.Yk.resize(n);
  fm.Ybar_k.resize(n);
  fm.Mk.resize(n);
  for (Index k = 0; k < n; ++k) {
    ComplexEntries yk;  // e_k e_k^T y = row k of y placed in row k
    for (Index j = 0; j < n; ++j)
      if (adm.y(k, j) != Complex(0, 0)) yk.add(k, j, adm.y(k, j));
    real_forms(yk, n, &fm.Yk[k], &fm.Ybar_k[k]);
    std::vector<Triplet> tm = {{k, k, 1.0}, {n + k, n + k, 1.0}};
    fm.Mk[k].resize(2 * n, 2 * n);
    fm.Mk[k].setFromTriplets(tm.begin(), tm.end());
  }
  fm.branches.reserve(adm.branch_rows.size());
  for (const auto& br : adm.branch_rows) {
    ComplexEntries ylm;
    ylm.add(br.from, br.from, br.y_self);
    ylm.add(br.from, br.to, br.y_mutual);
    FlowMatrices::OrientedBranch ob;
    ob.from = br.from;
    ob.to = br.to;
    ob.rate = br.rate;
    real_forms(ylm, n, &ob.Ylm, &ob.Ybar_lm);
    fm.branches.push_back(std::move(ob));
  }
  return fm;
}

Complex bus_injection(const AdmittanceModel& adm, const ComplexVector& V, Index k) {
  const Complex Ik = (adm.y.row(k) * V)(0);
  return V(k) * std::conj(Ik);
}

Complex branch_flow(const AdmittanceModel::BranchRow& br, const ComplexVector& V) {
  const Complex I = br.y_self * V(br.from) + br.y_mutual * V(br.to);
  return V(br.from) * std::conj(I);
}

}  // namespace feasproj
