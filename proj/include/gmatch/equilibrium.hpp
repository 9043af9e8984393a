#pragma once

#include <utility>

#include "gmatch/model.hpp"

namespace gmatch {

/// Residuals of the two first-order conditions the solved coupling must
/// satisfy: r1 = |T' V^-1 - A/sigma|_F and r2 = |T Sigma_X T' + V - Sigma_Y|_F.
struct FocReport {
  double r1 = 0.0;
  double r2 = 0.0;
  double r1_scale = 1.0;  // |A|_F / sigma
  double r2_scale = 1.0;  // |Sigma_Y|_F

  bool pass(const NumericPolicy& policy = {}) const {
    return r1 <= policy.foc_rtol * r1_scale && r2 <= policy.foc_rtol * r2_scale;
  }
};

/// Equilibrium transfer and the expected payoffs it implies for one match.
struct PayoffBreakdown {
  double transfer = 0.0;           // tau(x, y)
  double worker_utility = 0.0;     // U(x, y)
  double firm_profit = 0.0;        // Pi(x, y)
  double worker_multiplier = 0.0;  // a(x)
  double firm_multiplier = 0.0;    // b(y)
};

/// Closed-form equilibrium of a validated model. Requires rank(A) = min(m, n)
/// or A = 0; the m < n case is handled by solving the transposed market.
Equilibrium solve(const MatchingModel& model, const NumericPolicy& policy = {});

FocReport verify_foc(const MatchingModel& model, const Equilibrium& eq);

/// Cross-covariance of the optimal coupling as sigma -> 0 (the pure
/// assignment limit). Requires full-rank A.
Matrix limit_sigma_zero(const MatchingModel& model, const NumericPolicy& policy = {});

/// Regression matrix in the sigma -> 0 limit; A * limit_T0 is symmetric PSD.
Matrix limit_T0(const MatchingModel& model, const NumericPolicy& policy = {});

/// Cross-covariance as sigma -> infinity: the zero matrix.
Matrix limit_sigma_infinity(const MatchingModel& model);

/// Social welfare at the solved coupling, up to an additive constant that
/// does not depend on A: Tr(A' Sigma_XY) - sigma/2 log det(Sigma_X Sigma_{Y|X}).
/// Only welfare differences across affinities are meaningful.
double welfare(const MatchingModel& model, const Equilibrium& eq);

/// Scarcity shadow prices a(x) = sigma/2 x' Sigma_{X|Y}^-1 x and
/// b(y) = sigma/2 y' Sigma_{Y|X}^-1 y.
std::pair<double, double> shadow_prices(const MatchingModel& model, const Equilibrium& eq,
                                        const Vector& x, const Vector& y);

/// Requires model.split; worker_utility + firm_profit = x'Ay exactly.
PayoffBreakdown payoffs(const MatchingModel& model, const Equilibrium& eq, const Vector& x,
                        const Vector& y);

/// Log density of the equilibrium joint N(0, Sigma) at (x, y).
double log_density(const Equilibrium& eq, const Vector& x, const Vector& y);

/// Conditional law of Y given X = x: N(T x, Sigma_{Y|X}).
std::pair<Vector, Matrix> conditional_density_params(const Equilibrium& eq, const Vector& x);

}  // namespace gmatch
