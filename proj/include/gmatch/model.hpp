#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gmatch/matcalc.hpp"

namespace gmatch {

/// Decomposition of the affinity matrix into the worker-side and firm-side
/// surplus pieces, with the matching taste-scale parameters.
struct SurplusSplit {
  Matrix worker_amenity;     // B, m x n
  Matrix firm_productivity;  // Gamma, m x n
  double sigma1 = 0.5;       // worker taste scale
  double sigma2 = 0.5;       // firm taste scale
};

/// Market primitives: quadratic surplus x'Ay, centered Gaussian marginals
/// N(0, Sigma_X), N(0, Sigma_Y), and total heterogeneity scale sigma.
struct MatchingModel {
  Matrix affinity;  // A, m x n
  double sigma = 1.0;
  Matrix sigma_x;  // SPD, m x m
  Matrix sigma_y;  // SPD, n x n
  std::optional<SurplusSplit> split;

  Index m() const { return affinity.rows(); }
  Index n() const { return affinity.cols(); }
};

/// Solved market: the optimal coupling is N(0, joint_cov) with
/// joint_cov = [[Sigma_X, Sigma_XY], [Sigma_XY', Sigma_Y]].
struct Equilibrium {
  Matrix cross_cov;   // Sigma_XY, m x n
  Matrix regression;  // T, n x m:  Y = T X + eps
  Matrix cond_var_y;  // Sigma_{Y|X}, n x n
  Matrix cond_var_x;  // Sigma_{X|Y}, m x m
  Matrix delta;       // (sigma^2/4 A+ Sigma_X^-1 A+' + Sigma_Y)^{1/2}, n x n
  Matrix joint_cov;   // (m+n) x (m+n), PSD
  double welfare = 0.0;

  bool solved_by_swap = false;     // computed on the transposed problem (m < n)
  bool small_sigma_limit = false;  // sigma so small the delta term underflowed

  Index m() const { return cross_cov.rows(); }
  Index n() const { return cross_cov.cols(); }
};

/// Observed matched pairs, one row per match. Transfers are optional wage data.
struct MatchedSample {
  Matrix x;  // n_obs x m
  Matrix y;  // n_obs x n
  std::optional<Vector> transfers;

  Index n_obs() const { return x.rows(); }
  Index m() const { return x.cols(); }
  Index n() const { return y.cols(); }
};

/// Empirical (or implied) second moments feeding the identification map.
struct MomentSet {
  Matrix sigma_x;  // m x m
  Matrix sigma_y;  // n x n
  Matrix cross;    // Sigma_XY, m x n
  Index n_obs = 0;

  Index m() const { return cross.rows(); }
  Index n() const { return cross.cols(); }
};

struct Violation {
  Errc code;
  std::string what;
};

/// Diagnostic check of every model invariant; empty result means valid.
std::vector<Violation> validate(const MatchingModel& model, const NumericPolicy& policy = {});

/// Throws ValidationError listing all violations if the model is not valid.
void require_valid(const MatchingModel& model, const NumericPolicy& policy = {});

bool is_zero_affinity(const Matrix& A);

/// Rank of A with the policy's SVD threshold.
Index affinity_rank(const Matrix& A, const NumericPolicy& policy = {});

/// Moments of the solved coupling (n_obs = 0: these are population moments).
MomentSet implied_moments(const MatchingModel& model, const Equilibrium& eq);

}  // namespace gmatch
