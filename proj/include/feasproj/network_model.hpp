#pragma once

#include <stdexcept>
#include <vector>

#include "feasproj/case_data.hpp"
#include "feasproj/types.hpp"

namespace feasproj {

class ZeroImpedanceBranch : public std::runtime_error {
 public:
  ZeroImpedanceBranch(int from, int to)
      : std::runtime_error("zero-impedance branch " + std::to_string(from) +
                           "-" + std::to_string(to)) {}
};

// Bus admittance matrix plus the per-branch row operators y_lm. Each
// in-service branch appears twice, once per orientation, so flow limits can
// be applied at both ends.
struct AdmittanceModel {
  Index n_bus = 0;
  ComplexMatrix y;  // |N| x |N|
  struct BranchRow {
    Index from = 0, to = 0;   // bus positions
    Complex y_self, y_mutual; // y_lm = y_self e_l e_l^T + y_mutual e_l e_m^T
    double rate = 0;          // p.u., 0 = unlimited
  };
  std::vector<BranchRow> branch_rows;  // both orientations of in-service branches
};

AdmittanceModel build_admittance(const CaseData& cd);

// Real symmetric 2|N| x 2|N| matrices so that with x = [Re V; Im V]:
//   tr(Yk x x^T)      = Re of complex injection at bus k
//   tr(Ybar_k x x^T)  = Im of complex injection at bus k
//   tr(Mk x x^T)      = |V_k|^2
//   tr(Ylm x x^T)     = Re of from-end branch flow
//   tr(Ybar_lm x x^T) = Im of from-end branch flow
struct FlowMatrices {
  Index n_bus = 0;
  std::vector<SparseMatrix> Yk, Ybar_k, Mk;
  struct OrientedBranch {
    Index from = 0, to = 0;
    double rate = 0;
    SparseMatrix Ylm, Ybar_lm;
  };
  std::vector<OrientedBranch> branches;
};

FlowMatrices build_flow_matrices(const AdmittanceModel& adm);

// Oracle helpers (complex-arithmetic route, used by tests and candidates).
Complex bus_injection(const AdmittanceModel& adm, const ComplexVector& V, Index k);
Complex branch_flow(const AdmittanceModel::BranchRow& br, const ComplexVector& V);

}  // namespace feasproj
