#pragma once

#include <Eigen/Dense>

#include "gmatch/errors.hpp"
#include "gmatch/numeric_policy.hpp"

namespace gmatch {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Column-stacking vectorization: vec(M)[m*(j-1)+i] = M(i,j).
template <typename Derived>
Vector vec(const Eigen::MatrixBase<Derived>& M) {
  Matrix tmp = M;  // column-major storage is already the stacked order
  return Eigen::Map<const Vector>(tmp.data(), tmp.size());
}

Matrix unvec(const Vector& v, Index rows, Index cols);

/// Kronecker product: (A ⊗ B)(n(i-1)+k, q(j-1)+l) = A(i,j) B(k,l),
/// so vec(B X A') = (A ⊗ B) vec(X).
template <typename DA, typename DB>
Matrix kron(const Eigen::MatrixBase<DA>& A, const Eigen::MatrixBase<DB>& B) {
  Matrix out(A.rows() * B.rows(), A.cols() * B.cols());
  for (Index j = 0; j < A.cols(); ++j)
    for (Index i = 0; i < A.rows(); ++i)
      out.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  return out;
}

/// Transposition (commutation) matrix: commutation(m, n) * vec(M) = vec(M')
/// for every m-by-n M. A 0/1 permutation of size mn.
Matrix commutation(Index m, Index n);

Matrix symmetrize(const Matrix& S);

/// Unique PSD square root of a symmetric PSD matrix, by eigendecomposition.
/// Eigenvalues in [-eps_psd*|S|, 0] are clamped to zero; anything lower
/// raises NotPSD with the offending eigenvalue.
Matrix sym_sqrt(const Matrix& S, const NumericPolicy& policy = {});

/// Inverse square root; requires S positive definite (min eigenvalue above
/// eps_psd*|S|), otherwise raises Singular / NotPSD.
Matrix sym_inv_sqrt(const Matrix& S, const NumericPolicy& policy = {});

/// Moore-Penrose pseudoinverse via SVD. Singular values below
/// pinv_rtol * s_max are treated as zero.
Matrix pinv(const Matrix& M, const NumericPolicy& policy = {});

bool is_finite(const Matrix& M);

}  // namespace gmatch
