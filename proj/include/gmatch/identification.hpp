#pragma once

#include <optional>

#include "gmatch/model.hpp"
#include "gmatch/statics.hpp"

namespace gmatch {

/// Recovered surplus technology. Under the sigma = 1 normalization the
/// affinity field estimates A / sigma of the generating market.
struct AffinityEstimate {
  Matrix affinity;                // A-hat, m x n
  Matrix regression;              // T-hat, n x m
  Matrix cond_var_y;              // Sigma_{Y|X} hat, n x n
  std::optional<Matrix> avar;     // asymptotic variance of vec(A-hat), mn x mn
  Index n_obs = 0;
  double form_agreement = 0.0;    // relative gap between the two closed forms
  bool avar_by_fd = false;        // delta method fell back to finite differences
};

/// Decomposition of observed transfers into amenity and productivity parts.
struct TransferDecomposition {
  Matrix worker_amenity;     // B-hat
  Matrix firm_productivity;  // Gamma-hat
  double sigma1 = 0.0;       // worker taste share (sigma2 = 1 - sigma1 under sigma = 1)
  double residual_rms = 0.0;
  double sigma_sum_deviation = 0.0;  // |sigma1_hat + sigma2_hat - 1|
  bool boundary = false;             // sigma1 pinned at 0 or 1
};

/// Closed-form inverse map: A = sigma Sx^-1 Sxy (Sy - Sxy' Sx^-1 Sxy)^-1.
/// The redundant pseudoinverse form is evaluated on full-rank cross moments
/// and its agreement recorded (and enforced at policy.agree_rtol).
AffinityEstimate identify(const MomentSet& moments, double sigma = 1.0,
                          const NumericPolicy& policy = {});

/// Demeaned second moments with the 1/N divisor.
MomentSet empirical_moments(const MatchedSample& sample);

/// identify(empirical_moments(sample), 1) with delta-method avar attached.
AffinityEstimate estimate(const MatchedSample& sample, const NumericPolicy& policy = {});

/// Sampling variance of vec(A-hat): J V J' / n_obs, where V is the Gaussian
/// asymptotic variance of the stacked sample covariance blocks and J holds
/// the identification derivatives (symmetric directions projected).
Matrix delta_method(const MomentSet& moments, const JacobianSet& jac,
                    const NumericPolicy& policy = {});

/// Least-squares fit of observed transfers on the equilibrium features;
/// recovers (B, Gamma, sigma1) under the sigma = 1 normalization.
TransferDecomposition decompose_transfers(const MatchedSample& sample, const Equilibrium& eq,
                                          const Matrix& affinity,
                                          const NumericPolicy& policy = {});

}  // namespace gmatch
