#include "gmatch/identification.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <cmath>
#include <sstream>

namespace gmatch {

namespace {

Matrix inverse_pd_or(const Matrix& S, Errc code, const char* what) {
  Eigen::LLT<Matrix> llt(symmetrize(S));
  if (llt.info() != Eigen::Success) fail(code, what);
  return llt.solve(Matrix::Identity(S.rows(), S.cols()));
}

}  // namespace

AffinityEstimate identify(const MomentSet& moments, double sigma, const NumericPolicy& policy) {
  const Index m = moments.m(), n = moments.n();
  if (moments.sigma_x.rows() != m || moments.sigma_x.cols() != m ||
      moments.sigma_y.rows() != n || moments.sigma_y.cols() != n)
    fail(Errc::DimensionMismatch, "identify: moment blocks are not conformable");
  if (!(sigma > 0)) fail(Errc::InvalidConfig, "identify: sigma must be positive");

  Matrix SxInv = inverse_pd_or(moments.sigma_x, Errc::NotPositiveDefinite,
                               "identify: Sigma_X estimate not positive definite");
  Matrix condY = symmetrize(moments.sigma_y -
                            moments.cross.transpose() * SxInv * moments.cross);
  Matrix condYInv = inverse_pd_or(
      condY, Errc::DegenerateConditional,
      "identify: Sigma_{Y|X} not positive definite (sample joint covariance degenerate)");

  AffinityEstimate est;
  est.affinity = sigma * SxInv * moments.cross * condYInv;
  est.regression = moments.cross.transpose() * SxInv;
  est.cond_var_y = condY;
  est.n_obs = moments.n_obs;

  // Redundant pseudoinverse form, checked whenever the cross moment is
  // square and invertible; off the square case the pseudoinverse identity
  // breaks down and only the primary form applies. Both routes must agree
  // there; a gap flags numerical trouble upstream.
  if (m == n && !moments.cross.isZero(0.0) &&
      affinity_rank(moments.cross, policy) == std::min(m, n)) {
    Matrix crossP = pinv(moments.cross, policy);
    Matrix alt = sigma * pinv(Matrix(moments.sigma_y * crossP * moments.sigma_x -
                                     moments.cross.transpose()),
                              policy);
    double scale = std::max(est.affinity.norm(), 1e-300);
    est.form_agreement = (alt - est.affinity).norm() / scale;
    if (est.form_agreement > policy.agree_rtol) {
      std::ostringstream msg;
      msg << "identify: the two closed forms disagree (relative gap " << est.form_agreement
          << ")";
      fail(Errc::InternalInconsistency, msg.str());
    }
  }
  return est;
}

MomentSet empirical_moments(const MatchedSample& sample) {
  const Index N = sample.n_obs();
  if (N < 2) fail(Errc::TooFewObservations, "empirical_moments: need at least 2 observations");
  if (!is_finite(sample.x) || !is_finite(sample.y))
    fail(Errc::ValidationError, "empirical_moments: sample contains non-finite entries");

  Matrix xc = sample.x.rowwise() - sample.x.colwise().mean();
  Matrix yc = sample.y.rowwise() - sample.y.colwise().mean();

  MomentSet out;
  out.sigma_x = symmetrize(xc.transpose() * xc / double(N));
  out.sigma_y = symmetrize(yc.transpose() * yc / double(N));
  out.cross = xc.transpose() * yc / double(N);
  out.n_obs = N;
  return out;
}

namespace {

// Selection matrix extracting [vec Sx; vec Sxy; vec Sy] from vec of the full
// (m+n) x (m+n) covariance.
Matrix moment_selector(Index m, Index n) {
  const Index p = m + n;
  Matrix S = Matrix::Zero(m * m + m * n + n * n, p * p);
  for (Index j = 0; j < m; ++j)
    for (Index i = 0; i < m; ++i) S(m * j + i, p * j + i) = 1.0;
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < m; ++i) S(m * m + m * j + i, p * (m + j) + i) = 1.0;
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) S(m * m + m * n + n * j + i, p * (m + j) + (m + i)) = 1.0;
  return S;
}

}  // namespace

Matrix delta_method(const MomentSet& moments, const JacobianSet& jac,
                    const NumericPolicy& policy) {
  const Index m = moments.m(), n = moments.n();
  if (moments.n_obs < 1)
    fail(Errc::InvalidConfig, "delta_method: moments carry no sample size");
  if (jac.dA_dSxy.rows() != m * n || jac.dA_dSx.cols() != m * m || jac.dA_dSy.cols() != n * n)
    fail(Errc::DimensionMismatch, "delta_method: Jacobian blocks are not conformable");

  const Index p = m + n;
  Matrix joint(p, p);
  joint.topLeftCorner(m, m) = moments.sigma_x;
  joint.topRightCorner(m, n) = moments.cross;
  joint.bottomLeftCorner(n, m) = moments.cross.transpose();
  joint.bottomRightCorner(n, n) = moments.sigma_y;

  // Under joint normality, sqrt(N) vec(Cov-hat) has asymptotic variance
  // (I + commutation) (Sigma (x) Sigma); the stacked block variance follows
  // by selecting the (Sx, Sxy, Sy) coordinates.
  Matrix Vfull = (Matrix::Identity(p * p, p * p) + commutation(p, p)) * kron(joint, joint);
  Matrix S = moment_selector(m, n);
  Matrix V = S * Vfull * S.transpose();

  // Covariance arguments only move along symmetric directions.
  Matrix J(m * n, m * m + m * n + n * n);
  J.leftCols(m * m) = jac.dA_dSx * symmetric_projector(m);
  J.middleCols(m * m, m * n) = jac.dA_dSxy;
  J.rightCols(n * n) = jac.dA_dSy * symmetric_projector(n);

  Matrix avar = symmetrize(J * V * J.transpose() / double(moments.n_obs));
  (void)policy;
  return avar;
}

AffinityEstimate estimate(const MatchedSample& sample, const NumericPolicy& policy) {
  MomentSet moments = empirical_moments(sample);
  AffinityEstimate est = identify(moments, 1.0, policy);

  JacobianSet jac;
  jac.moment_base = moments;
  try {
    IdentificationJacobians idj = identification_jacobians(moments, 1.0, policy);
    jac.dA_dSxy = idj.dA_dSxy;
    jac.dA_dSx = idj.dA_dSx;
    jac.dA_dSy = idj.dA_dSy;
  } catch (const Error& e) {
    if (e.code() != Errc::SingularCross) throw;
    // Closed forms unavailable (non-square problem or rank-deficient cross
    // moment): differentiate the identification map numerically.
    est.avar_by_fd = true;
    jac.dA_dSxy = fd_jacobian(
        [&](const Matrix& c) {
          MomentSet mm = moments;
          mm.cross = c;
          return identify(mm, 1.0, policy).affinity;
        },
        moments.cross, 0.0, FdMode::Full, policy);
    jac.dA_dSx = fd_jacobian(
        [&](const Matrix& sx) {
          MomentSet mm = moments;
          mm.sigma_x = sx;
          return identify(mm, 1.0, policy).affinity;
        },
        moments.sigma_x, 0.0, FdMode::Symmetric, policy);
    jac.dA_dSy = fd_jacobian(
        [&](const Matrix& sy) {
          MomentSet mm = moments;
          mm.sigma_y = sy;
          return identify(mm, 1.0, policy).affinity;
        },
        moments.sigma_y, 0.0, FdMode::Symmetric, policy);
  }
  est.avar = delta_method(moments, jac, policy);
  return est;
}

TransferDecomposition decompose_transfers(const MatchedSample& sample, const Equilibrium& eq,
                                          const Matrix& affinity, const NumericPolicy& policy) {
  if (!sample.transfers) fail(Errc::NoTransfers, "decompose_transfers: sample has no transfers");
  const Index N = sample.n_obs();
  const Index m = sample.m(), n = sample.n();
  if (affinity.rows() != m || affinity.cols() != n)
    fail(Errc::DimensionMismatch, "decompose_transfers: affinity dimensions mismatch");

  Matrix VyInv = inverse_pd_or(eq.cond_var_y, Errc::Singular,
                               "decompose_transfers: Sigma_{Y|X} not positive definite");
  Matrix VxInv = inverse_pd_or(eq.cond_var_x, Errc::Singular,
                               "decompose_transfers: Sigma_{X|Y} not positive definite");

  // tau_i = x_i' M y_i + s1 * (-1/2 y_i' Vy^-1 y_i) + s2 * (1/2 x_i' Vx^-1 x_i)
  const Index k = m * n + 2;
  Matrix F(N, k);
  for (Index r = 0; r < N; ++r) {
    Matrix outer = sample.x.row(r).transpose() * sample.y.row(r);
    F.row(r).head(m * n) = vec(outer).transpose();
    F(r, m * n) = -0.5 * sample.y.row(r) * VyInv * sample.y.row(r).transpose();
    F(r, m * n + 1) = 0.5 * sample.x.row(r) * VxInv * sample.x.row(r).transpose();
  }

  Eigen::ColPivHouseholderQR<Matrix> qr(F);
  qr.setThreshold(1e-10);
  if (qr.rank() < k)
    fail(Errc::CollinearFeatures,
         "decompose_transfers: transfer features are collinear (rank " +
             std::to_string(qr.rank()) + " of " + std::to_string(k) + ")");
  Vector beta = qr.solve(*sample.transfers);

  TransferDecomposition out;
  Matrix M = unvec(beta.head(m * n), m, n);
  out.sigma1 = beta[m * n];
  double sigma2 = beta[m * n + 1];
  out.sigma_sum_deviation = std::abs(out.sigma1 + sigma2 - 1.0);
  out.firm_productivity = M + sigma2 * affinity;
  out.worker_amenity = affinity - out.firm_productivity;
  out.residual_rms = std::sqrt((F * beta - *sample.transfers).squaredNorm() / double(N));
  out.boundary = out.sigma1 <= policy.agree_rtol || out.sigma1 >= 1.0 - policy.agree_rtol;
  return out;
}

}  // namespace gmatch
