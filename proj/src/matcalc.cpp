#include "gmatch/matcalc.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <string>

namespace gmatch {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::NotPSD: return "NotPSD";
    case Errc::NotPositiveDefinite: return "NotPositiveDefinite";
    case Errc::Singular: return "Singular";
    case Errc::RankDeficientAffinity: return "RankDeficientAffinity";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::DegenerateConditional: return "DegenerateConditional";
    case Errc::TooFewObservations: return "TooFewObservations";
    case Errc::MissingSplit: return "MissingSplit";
    case Errc::CollinearFeatures: return "CollinearFeatures";
    case Errc::NoTransfers: return "NoTransfers";
    case Errc::SingularCross: return "SingularCross";
    case Errc::DimensionTooLarge: return "DimensionTooLarge";
    case Errc::MaxIterExceeded: return "MaxIterExceeded";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::ParseError: return "ParseError";
    case Errc::ValidationError: return "ValidationError";
    case Errc::HeaderMismatch: return "HeaderMismatch";
    case Errc::NonNumericCell: return "NonNumericCell";
    case Errc::EvaluationFailed: return "EvaluationFailed";
    case Errc::InternalInconsistency: return "InternalInconsistency";
  }
  return "UnknownError";
}

Matrix unvec(const Vector& v, Index rows, Index cols) {
  if (v.size() != rows * cols)
    fail(Errc::DimensionMismatch,
         "unvec: vector of length " + std::to_string(v.size()) + " cannot fill " +
             std::to_string(rows) + "x" + std::to_string(cols));
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

Matrix commutation(Index m, Index n) {
  Matrix T = Matrix::Zero(m * n, m * n);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < n; ++j) T(n * i + j, m * j + i) = 1.0;
  return T;
}

Matrix symmetrize(const Matrix& S) { return 0.5 * (S + S.transpose()); }

bool is_finite(const Matrix& M) { return M.allFinite(); }

namespace {

// Eigendecomposition with the PSD clamp shared by sqrt and inv-sqrt.
struct SymEig {
  Vector values;  // clamped
  Matrix vectors;
  double scale;  // largest |eigenvalue| before clamping
};

SymEig clamped_eig(const Matrix& S, const NumericPolicy& policy, const char* who) {
  if (S.rows() != S.cols()) fail(Errc::DimensionMismatch, std::string(who) + ": matrix not square");
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(S));
  if (es.info() != Eigen::Success) fail(Errc::EvaluationFailed, std::string(who) + ": eigensolver failed");
  Vector w = es.eigenvalues();
  double scale = std::max(std::abs(w.minCoeff()), std::abs(w.maxCoeff()));
  double floor = -policy.eps_psd * scale;
  for (Index i = 0; i < w.size(); ++i) {
    if (w[i] < floor)
      fail(Errc::NotPSD, std::string(who) + ": eigenvalue " + std::to_string(w[i]) +
                             " below tolerance " + std::to_string(floor));
    if (w[i] < 0) w[i] = 0;
  }
  return {w, es.eigenvectors(), scale};
}

}  // namespace

Matrix sym_sqrt(const Matrix& S, const NumericPolicy& policy) {
  SymEig e = clamped_eig(S, policy, "sym_sqrt");
  Matrix R = e.vectors * e.values.cwiseSqrt().asDiagonal() * e.vectors.transpose();
  return symmetrize(R);
}

Matrix sym_inv_sqrt(const Matrix& S, const NumericPolicy& policy) {
  SymEig e = clamped_eig(S, policy, "sym_inv_sqrt");
  double cutoff = policy.eps_psd * e.scale;
  for (Index i = 0; i < e.values.size(); ++i)
    if (e.values[i] <= cutoff)
      fail(Errc::Singular, "sym_inv_sqrt: eigenvalue " + std::to_string(e.values[i]) +
                               " not positive definite");
  Matrix R = e.vectors * e.values.cwiseSqrt().cwiseInverse().asDiagonal() * e.vectors.transpose();
  return symmetrize(R);
}

Matrix pinv(const Matrix& M, const NumericPolicy& policy) {
  if (M.size() == 0) return M.transpose();
  Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  double cutoff = policy.pinv_rtol * (s.size() > 0 ? s[0] : 0.0);
  Vector sinv = Vector::Zero(s.size());
  for (Index i = 0; i < s.size(); ++i)
    if (s[i] > cutoff) sinv[i] = 1.0 / s[i];
  return svd.matrixV() * sinv.asDiagonal() * svd.matrixU().transpose();
}

}  // namespace gmatch
