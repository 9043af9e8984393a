#include "gmatch/simulate.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "gmatch/equilibrium.hpp"
#include "gmatch/identification.hpp"
#include "gmatch/rng.hpp"

namespace gmatch {

namespace {

constexpr double kTwoPi = 6.283185307179586476925287;

Matrix psd_factor(const Matrix& S) {
  Eigen::LLT<Matrix> llt(symmetrize(S));
  if (llt.info() == Eigen::Success) return llt.matrixL();
  return sym_sqrt(S);  // PSD-singular joint: symmetric root, raises NotPSD otherwise
}

}  // namespace

MatchedSample sample_joint(const Equilibrium& eq, Index n, std::uint64_t seed) {
  const Index m = eq.m(), ny = eq.n();
  const Index p = m + ny;
  Matrix L = psd_factor(eq.joint_cov);

  MatchedSample out;
  out.x.resize(n, m);
  out.y.resize(n, ny);
  CounterRng rng(seed);
  Vector z(p);
  for (Index r = 0; r < n; ++r) {
    for (Index j = 0; j < p; ++j) z[j] = rng.normal();
    Vector w = L * z;
    out.x.row(r) = w.head(m).transpose();
    out.y.row(r) = w.tail(ny).transpose();
  }
  return out;
}

namespace {

struct MarginalGrid {
  Matrix points;  // K x d
  Vector weights;
  double truncated_mass = 0.0;
};

MarginalGrid tensor_grid(const Matrix& cov, Index points_per_dim, double truncation) {
  const Index d = cov.rows();
  std::vector<Vector> axes(d);
  double cell_volume = 1.0;
  for (Index k = 0; k < d; ++k) {
    double sd = std::sqrt(cov(k, k));
    axes[k] = Vector::LinSpaced(points_per_dim, -truncation * sd, truncation * sd);
    cell_volume *= axes[k][1] - axes[k][0];
  }

  Index K = 1;
  for (Index k = 0; k < d; ++k) K *= points_per_dim;

  Eigen::LLT<Matrix> llt(symmetrize(cov));
  if (llt.info() != Eigen::Success)
    fail(Errc::NotPositiveDefinite, "discretize: marginal covariance not positive definite");
  double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  double lognorm = -0.5 * d * std::log(kTwoPi) - 0.5 * logdet;

  MarginalGrid g;
  g.points.resize(K, d);
  g.weights.resize(K);
  Vector z(d);
  for (Index t = 0; t < K; ++t) {
    Index rem = t;
    for (Index k = d - 1; k >= 0; --k) {
      z[k] = axes[k][rem % points_per_dim];
      rem /= points_per_dim;
    }
    g.points.row(t) = z.transpose();
    g.weights[t] = std::exp(lognorm - 0.5 * z.dot(llt.solve(z))) * cell_volume;
  }
  double mass = g.weights.sum();
  g.truncated_mass = 1.0 - mass;
  g.weights /= mass;
  return g;
}

}  // namespace

DiscretizedMarket discretize(const MatchingModel& model, Index points_per_dim, double truncation,
                             const NumericPolicy& policy) {
  require_valid(model, policy);
  if (model.m() > 2 || model.n() > 2)
    fail(Errc::DimensionTooLarge, "discretize: the oracle grid supports at most 2 dimensions");
  if (points_per_dim < 21)
    fail(Errc::InvalidConfig, "discretize: need at least 21 points per dimension");
  if (!(truncation > 0)) fail(Errc::InvalidConfig, "discretize: truncation must be positive");

  MarginalGrid gx = tensor_grid(model.sigma_x, points_per_dim, truncation);
  MarginalGrid gy = tensor_grid(model.sigma_y, points_per_dim, truncation);

  DiscretizedMarket mkt;
  mkt.x_grid = gx.points;
  mkt.y_grid = gy.points;
  mkt.p = gx.weights;
  mkt.q = gy.weights;
  mkt.truncated_mass_x = gx.truncated_mass;
  mkt.truncated_mass_y = gy.truncated_mass;
  mkt.surplus = gx.points * model.affinity * gy.points.transpose();
  return mkt;
}

namespace {

// Row-wise log-sum-exp of S with the vector b broadcast over columns:
// out_i = log sum_j exp(S(i,j) + b(j)).
Vector lse_rows(const Matrix& S, const Vector& b, Matrix& work) {
  work = S.rowwise() + b.transpose();
  Vector mx = work.rowwise().maxCoeff();
  return (mx.array() + (work.colwise() - mx).array().exp().rowwise().sum().log()).matrix();
}

}  // namespace

Coupling ipfp_solve(const DiscretizedMarket& market, double sigma, double tol, int max_iter) {
  if (!(sigma > 0)) fail(Errc::InvalidConfig, "ipfp_solve: sigma must be positive");
  if (max_iter < 1) fail(Errc::InvalidConfig, "ipfp_solve: max_iter must be positive");

  const Index Kx = market.p.size(), Ky = market.q.size();
  Matrix S = market.surplus / sigma;
  Matrix St = S.transpose();
  Vector lp = market.p.array().log();
  Vector lq = market.q.array().log();

  Vector f = Vector::Zero(Kx);
  Vector g = Vector::Zero(Ky);
  Matrix work;

  Coupling out;
  Vector t = lse_rows(S, g + lq, work);
  for (int it = 1; it <= max_iter; ++it) {
    f = -t;                               // row marginals now exact
    g = -lse_rows(St, f + lp, work);      // column marginals now exact
    t = lse_rows(S, g + lq, work);
    out.iterations = it;
    out.row_residual = (market.p.array() * ((f + t).array().exp() - 1.0)).abs().maxCoeff();
    if (out.row_residual < tol) {
      out.converged = true;
      break;
    }
  }

  out.pi = ((S.colwise() + (f + lp)).rowwise() + (g + lq).transpose()).array().exp();
  out.col_residual = (out.pi.colwise().sum().transpose() - market.q).cwiseAbs().maxCoeff();
  return out;
}

Matrix coupling_cross_cov(const DiscretizedMarket& market, const Coupling& coupling) {
  Vector row_mass = coupling.pi.rowwise().sum();
  Vector col_mass = coupling.pi.colwise().sum();
  Vector mean_x = market.x_grid.transpose() * row_mass;
  Vector mean_y = market.y_grid.transpose() * col_mass;
  Matrix cross = market.x_grid.transpose() * coupling.pi * market.y_grid;
  return cross - mean_x * mean_y.transpose();
}

namespace {

double partition_sum(const Eigen::MatrixXf& D, const std::vector<int>& idx, size_t lo,
                     size_t hi) {
  double s = 0.0;
  for (size_t a = lo; a < hi; ++a)
    for (size_t b = lo; b < hi; ++b) s += D(idx[a], idx[b]);
  return s;
}

double energy_from_sums(double s11, double s22, double s12, double n1, double n2) {
  return 2.0 * s12 / (n1 * n2) - s11 / (n1 * n1) - s22 / (n2 * n2);
}

}  // namespace

double energy_distance(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) fail(Errc::DimensionMismatch, "energy_distance: dimension mismatch");
  const Index n1 = a.rows(), n2 = b.rows();
  double s12 = 0.0, s11 = 0.0, s22 = 0.0;
  for (Index i = 0; i < n1; ++i)
    for (Index j = 0; j < n2; ++j) s12 += (a.row(i) - b.row(j)).norm();
  for (Index i = 0; i < n1; ++i)
    for (Index j = 0; j < n1; ++j) s11 += (a.row(i) - a.row(j)).norm();
  for (Index i = 0; i < n2; ++i)
    for (Index j = 0; j < n2; ++j) s22 += (b.row(i) - b.row(j)).norm();
  return energy_from_sums(s11, s22, s12, double(n1), double(n2));
}

OveridResult overid_test(const MatchedSample& sample, Index n_sim, Index n_permutations,
                         std::uint64_t seed, const NumericPolicy& policy) {
  if (n_permutations < 1)
    fail(Errc::InvalidConfig, "overid_test: n_permutations must be positive");
  if (n_sim < 2) fail(Errc::InvalidConfig, "overid_test: n_sim must be at least 2");

  // Fit the model and simulate from the fitted equilibrium.
  MomentSet moments = empirical_moments(sample);
  AffinityEstimate est = estimate(sample, policy);
  MatchingModel fitted{est.affinity, 1.0, moments.sigma_x, moments.sigma_y, std::nullopt};
  Equilibrium eq = solve(fitted, policy);
  MatchedSample sim = sample_joint(eq, n_sim, CounterRng::derive(seed, 1));

  const Index n1 = sample.n_obs(), n2 = n_sim;
  const Index n = n1 + n2;
  const Index d = sample.m() + sample.n();
  Matrix pool(n, d);
  pool.topRows(n1) << sample.x, sample.y;
  pool.bottomRows(n2) << sim.x, sim.y;

  // Pooled pairwise distances, computed once; permutations only reaggregate.
  Eigen::MatrixXf D(n, n);
  for (Index i = 0; i < n; ++i) {
    D(i, i) = 0.0f;
    for (Index j = i + 1; j < n; ++j) {
      float dij = float((pool.row(i) - pool.row(j)).norm());
      D(i, j) = dij;
      D(j, i) = dij;
    }
  }
  double s_total = 0.0;
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) s_total += D(i, j);

  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  double s11 = partition_sum(D, idx, 0, size_t(n1));
  double s22 = partition_sum(D, idx, size_t(n1), size_t(n));
  double observed = energy_from_sums(s11, s22, 0.5 * (s_total - s11 - s22), double(n1), double(n2));

  CounterRng rng(CounterRng::derive(seed, 2));
  Index count_ge = 0;
  for (Index b = 0; b < n_permutations; ++b) {
    for (Index i = n - 1; i > 0; --i) {
      Index j = Index(rng.next_u64() % std::uint64_t(i + 1));
      std::swap(idx[i], idx[j]);
    }
    double p11 = partition_sum(D, idx, 0, size_t(n1));
    double p22 = partition_sum(D, idx, size_t(n1), size_t(n));
    double st = energy_from_sums(p11, p22, 0.5 * (s_total - p11 - p22), double(n1), double(n2));
    if (st >= observed) ++count_ge;
  }

  OveridResult out;
  out.statistic = observed;
  out.p_value = double(1 + count_ge) / double(1 + n_permutations);
  out.n_sim = n_sim;
  out.n_permutations = n_permutations;
  return out;
}

}  // namespace gmatch
