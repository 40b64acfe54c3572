#pragma once

#include <ostream>
#include <stdexcept>
#include <vector>

#include "feasproj/types.hpp"

namespace feasproj {

enum class BlockKind { psd, nonneg };

struct SdpBlock {
  BlockKind kind = BlockKind::psd;
  Index size = 0;
};

struct SdpEntry {
  int block = 0;
  Index row = 0, col = 0;
  double value = 0;
};

struct SdpConstraint {
  std::vector<SdpEntry> entries;
  double rhs = 0;
};

// min sum_b <C_b, X_b>  s.t.  sum_b <A_{i,b}, X_b> = b_i,  X_b in cone(b).
// Coefficient matrices are symmetric; add_entry mirrors off-diagonal terms.
struct SdpProblem {
  std::vector<SdpBlock> blocks;
  std::vector<SdpEntry> objective;
  std::vector<SdpConstraint> rows;

  int add_block(BlockKind kind, Index size);
  void add_objective(int block, Index r, Index c, double v);
  static void add_entry(std::vector<SdpEntry>& list, int block, Index r, Index c, double v);
};

enum class SdpStatus {
  optimal,
  near_optimal,
  infeasible_certificate,
  unbounded_certificate,
  numerical_failure
};

const char* sdp_status_name(SdpStatus s);

struct SdpSolution {
  SdpStatus status = SdpStatus::numerical_failure;
  std::vector<Matrix> X;  // nonneg blocks as n x 1 columns
  Vector y;
  std::vector<Matrix> S;
  double primal_objective = 0;
  double dual_objective = 0;
  double gap = 0;            // relative duality gap
  double primal_residual = 0;
  double dual_residual = 0;
  int iterations = 0;
  std::vector<int> presolve_removed;  // dependent rows dropped before solving
};

class SdpError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class LinearAlgebraFailure : public SdpError {
 public:
  using SdpError::SdpError;
};

class IterationLimit : public SdpError {
 public:
  using SdpError::SdpError;
};

// Primal-dual central-path following with a Mehrotra-style
// predictor-corrector and the symmetrized HKM direction; dense Schur
// complement with diagonal regularization.
SdpSolution solve_sdp(const SdpProblem& p, double tol = 1e-7);

// Sparse text dump: header, then "obj"/"row"/"a" records (block, row, col,
// value), for cross-checking against external solvers.
void dump_problem(const SdpProblem& p, std::ostream& os);

}  // namespace feasproj
