#include "gmatch/model.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <sstream>

namespace gmatch {

bool is_zero_affinity(const Matrix& A) { return A.isZero(0.0); }

Index affinity_rank(const Matrix& A, const NumericPolicy& policy) {
  if (A.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(A);
  const Vector& s = svd.singularValues();
  double cutoff = policy.rank_rtol * s[0];
  Index r = 0;
  for (Index i = 0; i < s.size(); ++i)
    if (s[i] > cutoff) ++r;
  return r;
}

namespace {

bool is_pd(const Matrix& S, double* min_eig = nullptr) {
  if (S.rows() != S.cols()) return false;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(S));
  double lo = es.eigenvalues().minCoeff();
  if (min_eig) *min_eig = lo;
  return lo > 0.0;
}

void check_marginal(std::vector<Violation>& out, const Matrix& S, const char* name) {
  if (S.size() == 0) {
    out.push_back({Errc::DimensionMismatch, std::string(name) + " is empty"});
    return;
  }
  if (!is_finite(S)) {
    out.push_back({Errc::ValidationError, std::string(name) + " has non-finite entries"});
    return;
  }
  if (!S.isApprox(S.transpose(), 1e-12))
    out.push_back({Errc::ValidationError, std::string(name) + " is not symmetric"});
  double lo = 0.0;
  if (!is_pd(S, &lo)) {
    std::ostringstream msg;
    msg << name << " is not positive definite (min eigenvalue " << lo << ")";
    out.push_back({Errc::NotPositiveDefinite, msg.str()});
  }
}

}  // namespace

std::vector<Violation> validate(const MatchingModel& model, const NumericPolicy& policy) {
  std::vector<Violation> out;
  const Index m = model.m(), n = model.n();

  if (m == 0 || n == 0) {
    out.push_back({Errc::DimensionMismatch, "affinity matrix is empty"});
    return out;
  }
  if (!is_finite(model.affinity))
    out.push_back({Errc::ValidationError, "affinity has non-finite entries"});
  if (!(model.sigma > 0.0))
    out.push_back({Errc::ValidationError, "sigma must be positive"});

  if (model.sigma_x.rows() != m || model.sigma_x.cols() != m)
    out.push_back({Errc::DimensionMismatch, "Sigma_X must be m x m"});
  else
    check_marginal(out, model.sigma_x, "Sigma_X");

  if (model.sigma_y.rows() != n || model.sigma_y.cols() != n)
    out.push_back({Errc::DimensionMismatch, "Sigma_Y must be n x n"});
  else
    check_marginal(out, model.sigma_y, "Sigma_Y");

  // Rank-deficient A is rejected except the all-zero matrix, which solves
  // to the independent coupling.
  if (is_finite(model.affinity) && !is_zero_affinity(model.affinity) &&
      affinity_rank(model.affinity, policy) < std::min(m, n))
    out.push_back({Errc::RankDeficientAffinity,
                   "affinity matrix has rank below min(m, n) and is not zero"});

  if (model.split) {
    const SurplusSplit& sp = *model.split;
    if (sp.worker_amenity.rows() != m || sp.worker_amenity.cols() != n ||
        sp.firm_productivity.rows() != m || sp.firm_productivity.cols() != n) {
      out.push_back({Errc::DimensionMismatch, "split matrices must be m x n"});
    } else {
      double scale = std::max(1.0, model.affinity.norm());
      if ((sp.worker_amenity + sp.firm_productivity - model.affinity).norm() >
          policy.split_rtol * scale)
        out.push_back({Errc::ValidationError, "split does not satisfy B + Gamma = A"});
    }
    if (!(sp.sigma1 > 0.0) || !(sp.sigma2 > 0.0))
      out.push_back({Errc::ValidationError, "split scale parameters must be positive"});
    else if (std::abs(sp.sigma1 + sp.sigma2 - model.sigma) >
             policy.split_rtol * std::max(1.0, model.sigma))
      out.push_back({Errc::ValidationError, "split does not satisfy sigma1 + sigma2 = sigma"});
  }
  return out;
}

void require_valid(const MatchingModel& model, const NumericPolicy& policy) {
  std::vector<Violation> violations = validate(model, policy);
  if (violations.empty()) return;
  std::ostringstream msg;
  for (size_t i = 0; i < violations.size(); ++i) {
    if (i) msg << "; ";
    msg << "[" << errc_name(violations[i].code) << "] " << violations[i].what;
  }
  // Surface the most specific code when there is a single violation.
  if (violations.size() == 1) fail(violations[0].code, violations[0].what);
  fail(Errc::ValidationError, msg.str());
}

MomentSet implied_moments(const MatchingModel& model, const Equilibrium& eq) {
  return {model.sigma_x, model.sigma_y, eq.cross_cov, 0};
}

}  // namespace gmatch
