#pragma once

#include <cstdint>

#include "gmatch/model.hpp"

namespace gmatch {

/// Tensor-grid discretization of the two marginals with the surplus table,
/// used by the independent entropic-transport oracle.
struct DiscretizedMarket {
  Matrix x_grid;   // Kx x m grid points
  Matrix y_grid;   // Ky x n
  Vector p;        // weights on x_grid, sum to 1
  Vector q;        // weights on y_grid
  Matrix surplus;  // Kx x Ky, surplus(i, j) = x_i' A y_j
  double truncated_mass_x = 0.0;  // Gaussian mass outside the grid, folded back
  double truncated_mass_y = 0.0;
};

/// Discrete coupling produced by the scaling iteration.
struct Coupling {
  Matrix pi;  // Kx x Ky, nonnegative
  double row_residual = 0.0;  // max |row sums - p|
  double col_residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct OveridResult {
  double statistic = 0.0;
  double p_value = 1.0;
  Index n_sim = 0;
  Index n_permutations = 0;
};

/// n i.i.d. draws from the equilibrium joint N(0, Sigma). Deterministic:
/// identical (seed, n, Sigma) give bit-identical output.
MatchedSample sample_joint(const Equilibrium& eq, Index n, std::uint64_t seed);

/// Tensor grid of points_per_dim per coordinate over +-truncation marginal
/// standard deviations, weighted by the Gaussian density times cell volume
/// (renormalized). Only markets with m, n <= 2 are supported.
DiscretizedMarket discretize(const MatchingModel& model, Index points_per_dim, double truncation,
                             const NumericPolicy& policy = {});

/// Alternating scaling iteration for the discrete entropic assignment
/// problem: pi_ij = p_i q_j u_i v_j exp(surplus_ij / sigma), with u, v
/// updated until the worst marginal residual falls below tol. Log-domain
/// arithmetic, so small sigma does not overflow. Non-convergence returns the
/// best iterate with converged = false.
Coupling ipfp_solve(const DiscretizedMarket& market, double sigma, double tol, int max_iter);

/// Cross-covariance of a discrete coupling (demeaned by coupling means).
Matrix coupling_cross_cov(const DiscretizedMarket& market, const Coupling& coupling);

/// Specification test: fit the quadratic-Gaussian model on the sample, draw
/// n_sim points from the fitted equilibrium, and compare via the two-sample
/// energy distance with a permutation p-value.
OveridResult overid_test(const MatchedSample& sample, Index n_sim, Index n_permutations,
                         std::uint64_t seed, const NumericPolicy& policy = {});

/// Energy distance between two point clouds of equal dimension.
double energy_distance(const Matrix& a, const Matrix& b);

}  // namespace gmatch
