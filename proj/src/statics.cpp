#include "gmatch/statics.hpp"

#include <Eigen/LU>

#include <sstream>

#include "gmatch/equilibrium.hpp"
#include "gmatch/identification.hpp"

namespace gmatch {

Matrix symmetric_projector(Index p) {
  return 0.5 * (Matrix::Identity(p * p, p * p) + commutation(p, p));
}

namespace {

// The closed forms differentiate the inverse pair A <-> Sigma_XY through the
// inverse-of-a-matrix rule, which is exact only when every factor is square
// and invertible. Non-square markets are routed to finite differences.
void require_square_full_rank(const Matrix& cross, const NumericPolicy& policy,
                              const char* who) {
  if (cross.rows() != cross.cols())
    fail(Errc::SingularCross,
         std::string(who) + ": closed forms need a square market (m = n); use fd_jacobian");
  if (affinity_rank(cross, policy) < cross.rows())
    fail(Errc::SingularCross,
         std::string(who) + ": cross-covariance is rank deficient; use fd_jacobian");
}

// Solve bracket * X = rhs, falling back to the pseudoinverse when the
// bracket is too ill-conditioned for a plain LU solve.
Matrix bracket_solve(const Matrix& bracket, const Matrix& rhs, const NumericPolicy& policy) {
  Eigen::FullPivLU<Matrix> lu(bracket);
  lu.setThreshold(1e-14);
  if (lu.isInvertible() && lu.rcond() > 1.0 / policy.cond_limit) return lu.solve(rhs);
  return pinv(bracket, policy) * rhs;
}

}  // namespace

IdentificationJacobians identification_jacobians(const MomentSet& moments, double sigma,
                                                 const NumericPolicy& policy) {
  require_square_full_rank(moments.cross, policy, "identification_jacobians");
  const Index m = moments.m(), n = moments.n();

  Matrix A1 = identify(moments, 1.0, policy).affinity;
  Matrix P = pinv(moments.cross, policy);
  Matrix KA = kron(A1.transpose(), A1);
  Matrix left = moments.sigma_x * P.transpose();
  Matrix right = moments.sigma_y * P;

  IdentificationJacobians out;
  out.dA_dSxy = sigma * KA * (kron(left, right) + commutation(m, n));
  out.dA_dSx = -sigma * KA * kron(Matrix::Identity(m, m), right);
  out.dA_dSy = -sigma * KA * kron(left, Matrix::Identity(n, n));
  return out;
}

EquilibriumJacobians equilibrium_jacobians(const MatchingModel& model, const Equilibrium& eq,
                                           const NumericPolicy& policy, bool validate_fd) {
  require_square_full_rank(eq.cross_cov, policy, "equilibrium_jacobians");
  const Index m = model.m(), n = model.n();
  if (affinity_rank(model.affinity, policy) < std::min(m, n))
    fail(Errc::RankDeficientAffinity, "equilibrium_jacobians: affinity is rank deficient");

  Matrix P = pinv(eq.cross_cov, policy);
  Matrix Ap = pinv(model.affinity, policy);
  Matrix bracket = kron(model.sigma_x * P.transpose(), model.sigma_y * P) + commutation(m, n);

  EquilibriumJacobians out;
  out.dSxy_dA = model.sigma * bracket_solve(bracket, kron(Ap.transpose(), Ap), policy);
  out.dSxy_dSx =
      bracket_solve(bracket, kron(Matrix::Identity(m, m), model.sigma_y * P), policy);
  out.dSxy_dSy =
      bracket_solve(bracket, kron(model.sigma_x * P.transpose(), Matrix::Identity(n, n)), policy);

  if (validate_fd) {
    Matrix fdA = fd_jacobian(
        [&](const Matrix& Am) {
          MatchingModel mm = model;
          mm.affinity = Am;
          mm.split.reset();
          return solve(mm, policy).cross_cov;
        },
        model.affinity, 0.0, FdMode::Full, policy);
    Matrix fdSx = fd_jacobian(
        [&](const Matrix& S) {
          MatchingModel mm = model;
          mm.sigma_x = symmetrize(S);
          mm.split.reset();
          return solve(mm, policy).cross_cov;
        },
        model.sigma_x, 0.0, FdMode::Symmetric, policy);
    Matrix fdSy = fd_jacobian(
        [&](const Matrix& S) {
          MatchingModel mm = model;
          mm.sigma_y = symmetrize(S);
          mm.split.reset();
          return solve(mm, policy).cross_cov;
        },
        model.sigma_y, 0.0, FdMode::Symmetric, policy);
    double e1 = (out.dSxy_dA - fdA).norm() / std::max(1.0, fdA.norm());
    double e2 = (out.dSxy_dSx * symmetric_projector(m) - fdSx).norm() / std::max(1.0, fdSx.norm());
    double e3 = (out.dSxy_dSy * symmetric_projector(n) - fdSy).norm() / std::max(1.0, fdSy.norm());
    if (e1 > 1e-6 || e2 > 1e-6 || e3 > 1e-6) {
      std::ostringstream msg;
      msg << "equilibrium_jacobians: closed form disagrees with finite differences (" << e1
          << ", " << e2 << ", " << e3 << ")";
      fail(Errc::InternalInconsistency, msg.str());
    }
  }
  return out;
}

JacobianSet full_jacobians(const MatchingModel& model, const Equilibrium& eq,
                           const NumericPolicy& policy) {
  MomentSet moments = implied_moments(model, eq);
  IdentificationJacobians idj = identification_jacobians(moments, model.sigma, policy);
  EquilibriumJacobians eqj = equilibrium_jacobians(model, eq, policy);
  JacobianSet out;
  out.dA_dSxy = idj.dA_dSxy;
  out.dA_dSx = idj.dA_dSx;
  out.dA_dSy = idj.dA_dSy;
  out.dSxy_dA = eqj.dSxy_dA;
  out.dSxy_dSx = eqj.dSxy_dSx;
  out.dSxy_dSy = eqj.dSxy_dSy;
  out.moment_base = moments;
  out.model_base = model;
  return out;
}

Matrix fd_jacobian(const MatrixFn& f, const Matrix& at, double step, FdMode mode,
                   const NumericPolicy& policy) {
  if (step <= 0.0) step = policy.fd_step * (1.0 + at.norm());
  const Index r = at.rows(), c = at.cols();

  Matrix f0 = f(at);
  Matrix J(f0.size(), r * c);
  for (Index j = 0; j < c; ++j) {
    for (Index i = 0; i < r; ++i) {
      Matrix D = Matrix::Zero(r, c);
      if (mode == FdMode::Symmetric) {
        if (r != c) fail(Errc::DimensionMismatch, "fd_jacobian: symmetric mode needs square input");
        if (i == j)
          D(i, i) = 1.0;
        else
          D(i, j) = D(j, i) = 0.5;
      } else {
        D(i, j) = 1.0;
      }
      Matrix hi = f(at + step * D);
      Matrix lo = f(at - step * D);
      J.col(r * j + i) = vec((hi - lo) / (2.0 * step));
    }
  }
  return J;
}

}  // namespace gmatch
