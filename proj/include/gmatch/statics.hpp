#pragma once

#include <functional>
#include <optional>

#include "gmatch/model.hpp"

namespace gmatch {

/// The six local sensitivity matrices linking the affinity matrix and the
/// equilibrium cross-covariance, in vec (column-stacking) coordinates.
/// dA_dSxy * dSxy_dA = I at a common base point.
struct JacobianSet {
  Matrix dA_dSxy;   // mn x mn
  Matrix dA_dSx;    // mn x m^2
  Matrix dA_dSy;    // mn x n^2
  Matrix dSxy_dA;   // mn x mn
  Matrix dSxy_dSx;  // mn x m^2
  Matrix dSxy_dSy;  // mn x n^2
  std::optional<MomentSet> moment_base;
  std::optional<MatchingModel> model_base;
};

struct IdentificationJacobians {
  Matrix dA_dSxy, dA_dSx, dA_dSy;
};

struct EquilibriumJacobians {
  Matrix dSxy_dA, dSxy_dSx, dSxy_dSy;
};

/// Closed-form derivatives of the identification map moments -> A, scaled so
/// they differentiate identify(moments, sigma). Only available on square
/// problems (m = n) with invertible cross-covariance; otherwise raises
/// SingularCross and the caller should fall back to fd_jacobian.
IdentificationJacobians identification_jacobians(const MomentSet& moments, double sigma,
                                                 const NumericPolicy& policy = {});

/// Closed-form derivatives of the equilibrium map (A, Sigma_X, Sigma_Y) ->
/// Sigma_XY at the solved point. Same square/invertible restriction as
/// identification_jacobians. With validate_fd set, each matrix is checked
/// against central differences of solve() at construction.
EquilibriumJacobians equilibrium_jacobians(const MatchingModel& model, const Equilibrium& eq,
                                           const NumericPolicy& policy = {},
                                           bool validate_fd = false);

/// Both halves at the matched base point implied by one model.
JacobianSet full_jacobians(const MatchingModel& model, const Equilibrium& eq,
                           const NumericPolicy& policy = {});

enum class FdMode {
  Full,       // perturb every entry independently
  Symmetric,  // perturb (E_ij + E_ji)/2 directions; the result equals
              // J * (I + commutation)/2 of the unrestricted Jacobian
};

using MatrixFn = std::function<Matrix(const Matrix&)>;

/// Central-difference Jacobian of a matrix-valued function of a matrix,
/// column-by-column in vec order. step <= 0 selects fd_step * (1 + |at|_F).
Matrix fd_jacobian(const MatrixFn& f, const Matrix& at, double step = 0.0,
                   FdMode mode = FdMode::Full, const NumericPolicy& policy = {});

/// Symmetric-direction projection (I + commutation(p, p)) / 2.
Matrix symmetric_projector(Index p);

}  // namespace gmatch
