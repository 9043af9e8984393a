#pragma once

namespace gmatch {

/// Shared numeric tolerances. All thresholds are relative to a matrix norm
/// of the quantity being tested; one instance is threaded through every
/// module so a caller can tighten or relax the whole stack at once.
struct NumericPolicy {
  double eps_psd = 1e-10;     // eigenvalues in [-eps_psd*|S|, 0] are clamped to 0
  double pinv_rtol = 1e-12;   // singular values below rtol*s_max count as zero
  double rank_rtol = 1e-12;   // rank decision for affinity matrices
  double foc_rtol = 1e-10;    // first-order-condition residual gate
  double split_rtol = 1e-12;  // B + Gamma = A agreement
  double agree_rtol = 1e-8;   // agreement between redundant closed forms
  double cond_limit = 1e12;   // conditioning bound before falling back to pinv
  double fd_step = 1e-5;      // finite-difference step factor
  double ipfp_tol = 1e-12;    // IPFP marginal residual target
  int ipfp_max_iter = 100000;
};

}  // namespace gmatch
