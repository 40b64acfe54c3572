#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <complex>

namespace feasproj {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using SparseVector = Eigen::SparseVector<double>;
using Triplet = Eigen::Triplet<double>;
using Complex = std::complex<double>;

enum class NormKind { l1, l2, linf };

const char* norm_name(NormKind k);
NormKind norm_from_name(const std::string& s);

}  // namespace feasproj
