#include "gmatch/equilibrium.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

namespace gmatch {

namespace {

constexpr double kPi = 3.14159265358979323846;

double cond_sym(const Matrix& S) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(S), Eigen::EigenvaluesOnly);
  double lo = std::abs(es.eigenvalues().minCoeff());
  double hi = std::abs(es.eigenvalues().maxCoeff());
  return lo > 0 ? hi / lo : std::numeric_limits<double>::infinity();
}

double logdet_pd(const Matrix& S, const char* who) {
  Eigen::LLT<Matrix> llt(symmetrize(S));
  if (llt.info() != Eigen::Success)
    fail(Errc::Singular, std::string(who) + ": matrix not positive definite");
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

Matrix inverse_pd(const Matrix& S, const char* who) {
  Eigen::LLT<Matrix> llt(symmetrize(S));
  if (llt.info() != Eigen::Success)
    fail(Errc::Singular, std::string(who) + ": matrix not positive definite");
  return llt.solve(Matrix::Identity(S.rows(), S.cols()));
}

// Unique SPD solution V of  V K V / sigma^2 + V = Sy  for SPD K.
// Substituting W = K^{1/2} V K^{1/2} turns it into W^2/sigma^2 + W = R with
// R = K^{1/2} Sy K^{1/2}; completing the square gives
// W = sigma [ (R + sigma^2/4 I)^{1/2} - sigma/2 I ].
Matrix solve_cond_var(const Matrix& K, double sigma, const Matrix& Sy,
                      const NumericPolicy& policy) {
  const Index n = K.rows();
  Matrix Kh = sym_sqrt(K, policy);
  Matrix Kmh = sym_inv_sqrt(K, policy);
  Matrix R = symmetrize(Kh * Sy * Kh);
  Matrix I = Matrix::Identity(n, n);
  Matrix W = sigma * (sym_sqrt(R + (sigma * sigma / 4.0) * I, policy) - (sigma / 2.0) * I);
  return symmetrize(Kmh * W * Kmh);
}

struct OrientedCore {
  Matrix cross;       // m x n
  Matrix cond_var_y;  // n x n
};

// Equilibrium cross-covariance for an orientation with rank(A) = n <= m.
// The first-order condition A V = sigma Sx^-1 Sxy, with V the conditional
// variance of Y given X, pins Sxy = Sx A V / sigma; plugging that into the
// Schur complement V = Sy - Sxy' Sx^-1 Sxy yields the quadratic above with
// K = A' Sx A.
OrientedCore solve_oriented(const Matrix& A, double sigma, const Matrix& Sx, const Matrix& Sy,
                            const NumericPolicy& policy) {
  Matrix K = symmetrize(A.transpose() * Sx * A);
  Matrix V = solve_cond_var(K, sigma, Sy, policy);
  Matrix cross = (1.0 / sigma) * (Sx * A * V);
  return {cross, V};
}

}  // namespace

Equilibrium solve(const MatchingModel& model, const NumericPolicy& policy) {
  require_valid(model, policy);
  const Index m = model.m(), n = model.n();
  const Matrix& A = model.affinity;
  const Matrix& Sx = model.sigma_x;
  const Matrix& Sy = model.sigma_y;
  const double sigma = model.sigma;

  Equilibrium eq;

  if (is_zero_affinity(A)) {
    // Independent coupling.
    eq.cross_cov = Matrix::Zero(m, n);
    eq.regression = Matrix::Zero(n, m);
    eq.cond_var_y = Sy;
    eq.cond_var_x = Sx;
    eq.delta = sym_sqrt(Sy, policy);
  } else {
    try {
      if (m >= n) {
        OrientedCore core = solve_oriented(A, sigma, Sx, Sy, policy);
        eq.cross_cov = core.cross;
        eq.cond_var_y = core.cond_var_y;
        eq.cond_var_x =
            symmetrize(Sx - eq.cross_cov * inverse_pd(Sy, "solve") * eq.cross_cov.transpose());
      } else {
        // The oriented solver needs full column rank; solve the transposed
        // market and transpose back.
        OrientedCore core = solve_oriented(A.transpose(), sigma, Sy, Sx, policy);
        eq.cross_cov = core.cross.transpose();
        eq.cond_var_x = core.cond_var_y;
        eq.cond_var_y =
            symmetrize(Sy - eq.cross_cov.transpose() * inverse_pd(Sx, "solve") * eq.cross_cov);
        eq.solved_by_swap = true;
      }
    } catch (const Error& e) {
      if (e.code() == Errc::NotPSD || e.code() == Errc::Singular) {
        std::ostringstream msg;
        msg << e.what() << " [cond(Sigma_X)=" << cond_sym(Sx) << ", cond(Sigma_Y)=" << cond_sym(Sy)
            << ", sigma=" << sigma << "]";
        fail(e.code(), msg.str());
      }
      throw;
    }
    eq.regression = (inverse_pd(Sx, "solve") * eq.cross_cov).transpose();

    Matrix Ap = pinv(A, policy);
    Matrix dterm = symmetrize(Ap * inverse_pd(Sx, "solve") * Ap.transpose());
    // When the sigma^2/4 term underflows against Sigma_Y the solution has
    // reached its small-sigma limit in double precision.
    eq.small_sigma_limit = 0.25 * sigma * sigma * dterm.norm() < 1e-16 * Sy.norm();
    eq.delta = sym_sqrt((sigma * sigma / 4.0) * dterm + Sy, policy);
  }

  eq.joint_cov.resize(m + n, m + n);
  eq.joint_cov.topLeftCorner(m, m) = Sx;
  eq.joint_cov.topRightCorner(m, n) = eq.cross_cov;
  eq.joint_cov.bottomLeftCorner(n, m) = eq.cross_cov.transpose();
  eq.joint_cov.bottomRightCorner(n, n) = Sy;

  eq.welfare = welfare(model, eq);
  return eq;
}

FocReport verify_foc(const MatchingModel& model, const Equilibrium& eq) {
  const Matrix& Sx = model.sigma_x;
  const Matrix& Sy = model.sigma_y;
  FocReport rep;

  // r1 is computed from the cross-covariance alone so that an inconsistent
  // coupling is detected even if the stored regression fields are stale.
  Matrix SxInvCross = Sx.ldlt().solve(eq.cross_cov);
  Matrix V = symmetrize(Sy - eq.cross_cov.transpose() * SxInvCross);
  Matrix lhs = V.ldlt().solve(SxInvCross.transpose()).transpose();
  rep.r1 = (lhs - model.affinity / model.sigma).norm();
  rep.r1_scale = std::max(model.affinity.norm() / model.sigma, 1e-300);

  rep.r2 = (eq.regression * Sx * eq.regression.transpose() + eq.cond_var_y - Sy).norm();
  rep.r2_scale = std::max(Sy.norm(), 1e-300);
  return rep;
}

Matrix limit_sigma_zero(const MatchingModel& model, const NumericPolicy& policy) {
  const Index m = model.m(), n = model.n();
  const Matrix& A = model.affinity;
  if (affinity_rank(A, policy) < std::min(m, n))
    fail(Errc::RankDeficientAffinity, "limit_sigma_zero requires rank(A) = min(m, n)");
  if (m >= n) {
    Matrix Syh = sym_sqrt(model.sigma_y, policy);
    Matrix mid = sym_inv_sqrt(symmetrize(Syh * A.transpose() * model.sigma_x * A * Syh), policy);
    return model.sigma_x * A * Syh * mid * Syh;
  }
  Matrix Sxh = sym_sqrt(model.sigma_x, policy);
  Matrix mid = sym_inv_sqrt(symmetrize(Sxh * A * model.sigma_y * A.transpose() * Sxh), policy);
  return (model.sigma_y * A.transpose() * Sxh * mid * Sxh).transpose();
}

Matrix limit_T0(const MatchingModel& model, const NumericPolicy& policy) {
  Matrix cross0 = limit_sigma_zero(model, policy);
  return model.sigma_x.ldlt().solve(cross0).transpose();
}

Matrix limit_sigma_infinity(const MatchingModel& model) {
  return Matrix::Zero(model.m(), model.n());
}

double welfare(const MatchingModel& model, const Equilibrium& eq) {
  double surplus = (model.affinity.transpose() * eq.cross_cov).trace();
  double entropy_term =
      logdet_pd(model.sigma_x, "welfare") + logdet_pd(eq.cond_var_y, "welfare");
  return surplus - 0.5 * model.sigma * entropy_term;
}

std::pair<double, double> shadow_prices(const MatchingModel& model, const Equilibrium& eq,
                                        const Vector& x, const Vector& y) {
  if (x.size() != model.m() || y.size() != model.n())
    fail(Errc::DimensionMismatch, "shadow_prices: point dimensions do not match the model");
  Eigen::LLT<Matrix> lx(symmetrize(eq.cond_var_x));
  Eigen::LLT<Matrix> ly(symmetrize(eq.cond_var_y));
  if (lx.info() != Eigen::Success || ly.info() != Eigen::Success)
    fail(Errc::Singular, "shadow_prices: conditional covariance not positive definite");
  double a = 0.5 * model.sigma * x.dot(lx.solve(x));
  double b = 0.5 * model.sigma * y.dot(ly.solve(y));
  return {a, b};
}

PayoffBreakdown payoffs(const MatchingModel& model, const Equilibrium& eq, const Vector& x,
                        const Vector& y) {
  if (!model.split) fail(Errc::MissingSplit, "payoffs requires a surplus split (B, Gamma)");
  const SurplusSplit& sp = *model.split;
  auto [a, b] = shadow_prices(model, eq, x, y);

  const double s = model.sigma;
  double xAy = x.dot(model.affinity * y);
  double xBy = x.dot(sp.worker_amenity * y);
  double xGy = x.dot(sp.firm_productivity * y);

  PayoffBreakdown out;
  out.worker_multiplier = a;
  out.firm_multiplier = b;
  out.transfer = (sp.sigma1 * (xGy - b) - sp.sigma2 * (xBy - a)) / s;
  out.worker_utility = (sp.sigma1 * xAy - sp.sigma1 * b + sp.sigma2 * a) / s;
  out.firm_profit = (sp.sigma2 * xAy - sp.sigma2 * a + sp.sigma1 * b) / s;
  return out;
}

double log_density(const Equilibrium& eq, const Vector& x, const Vector& y) {
  const Index p = eq.m() + eq.n();
  if (x.size() != eq.m() || y.size() != eq.n())
    fail(Errc::DimensionMismatch, "log_density: point dimensions do not match the equilibrium");
  Eigen::LLT<Matrix> llt(symmetrize(eq.joint_cov));
  if (llt.info() != Eigen::Success)
    fail(Errc::Singular, "log_density: joint covariance not positive definite");
  Vector z(p);
  z << x, y;
  double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return -0.5 * p * std::log(2.0 * kPi) - 0.5 * logdet - 0.5 * z.dot(llt.solve(z));
}

std::pair<Vector, Matrix> conditional_density_params(const Equilibrium& eq, const Vector& x) {
  if (x.size() != eq.m())
    fail(Errc::DimensionMismatch, "conditional_density_params: x dimension mismatch");
  return {eq.regression * x, eq.cond_var_y};
}

}  // namespace gmatch
