#include "feasproj/quadratic.hpp"

#include <algorithm>

namespace feasproj {

double QuadraticFunction::value(const Vector& z) const {
  double acc = d;
  for (int k = 0; k < Q.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(Q, k); it; ++it)
      acc += it.value() * z[it.row()] * z[it.col()];
  for (SparseVector::InnerIterator it(c); it; ++it) acc += it.value() * z[it.index()];
  return acc;
}

Vector QuadraticFunction::gradient(const Vector& z) const {
  Vector g = Vector::Zero(dim());
  accumulate_gradient(z, 1.0, g);
  return g;
}

void QuadraticFunction::accumulate_gradient(const Vector& z, double w, Vector& g) const {
  for (int k = 0; k < Q.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(Q, k); it; ++it)
      g[it.row()] += 2.0 * w * it.value() * z[it.col()];
  for (SparseVector::InnerIterator it(c); it; ++it) g[it.index()] += w * it.value();
}

std::vector<Index> QuadraticFunction::support() const {
  std::vector<Index> s;
  for (int k = 0; k < Q.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(Q, k); it; ++it) {
      s.push_back(it.row());
      s.push_back(it.col());
    }
  for (SparseVector::InnerIterator it(c); it; ++it) s.push_back(it.index());
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return s;
}

QuadraticFunction QuadraticFunction::zero(Index n) {
  QuadraticFunction f;
  f.Q.resize(n, n);
  f.c.resize(n);
  f.d = 0;
  return f;
}

QuadraticFunction QuadraticFunction::linear(
    Index n, const std::vector<std::pair<Index, double>>& terms, double constant) {
  QuadraticFunction f = zero(n);
  for (auto [i, v] : terms) f.c.coeffRef(i) += v;
  f.d = constant;
  return f;
}

QuadraticFunction QuadraticFunction::from_trace(const SparseMatrix& A, double constant) {
  QuadraticFunction f;
  f.Q = A;
  f.c.resize(A.rows());
  f.d = constant;
  return f;
}

}  // namespace feasproj
