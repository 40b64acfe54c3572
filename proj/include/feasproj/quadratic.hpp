#pragma once

#include <vector>

#include "feasproj/types.hpp"

namespace feasproj {

// f(z) = z^T Q z + c^T z + d with Q symmetric. Gradient 2 Q z + c,
// Hessian 2 Q (constant).
struct QuadraticFunction {
  SparseMatrix Q;
  SparseVector c;
  double d = 0;

  Index dim() const { return Q.rows(); }

  double value(const Vector& z) const;
  Vector gradient(const Vector& z) const;
  // g += w * (2 Q z + c), touching only the support of Q and c.
  void accumulate_gradient(const Vector& z, double w, Vector& g) const;
  std::vector<Index> support() const;

  static QuadraticFunction zero(Index n);
  static QuadraticFunction linear(Index n, const std::vector<std::pair<Index, double>>& terms,
                                  double constant = 0);
  static QuadraticFunction from_trace(const SparseMatrix& A, double constant = 0);
};

}  // namespace feasproj
