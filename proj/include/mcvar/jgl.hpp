#pragma once

#include "mcvar/panel.hpp"

#include <vector>

namespace mcvar {

// Weight on the log-determinant term of the precision objective: the
// criterion as displayed scales it by N*J; the Gaussian likelihood uses N.
enum class LogDetWeight { kDimension, kUnit };

inline double logdet_multiplier(LogDetWeight w, int num_series) {
  return w == LogDetWeight::kDimension ? static_cast<double>(num_series) : 1.0;
}

struct AdmmOptions {
  double rho = 1.0;          // augmented Lagrangian parameter, fixed
  int max_iter = 1000;
  double primal_tol = 1e-5;  // on ||Omega - Z||_F summed over classes
  double dual_tol = 1e-5;    // on rho ||Z - Z_prev||_F
  LogDetWeight logdet = LogDetWeight::kDimension;
};

// S^(k) = E'E / N per class; symmetric positive semidefinite.
std::vector<Matrix> residual_covariance(const std::vector<Matrix>& residuals);

// Exact minimizer over z of
//   (1/2) sum_k (z_k - x_k)^2 + t_fuse sum_{k<k'} |z_k - z_k'| + t_sparse sum_k |z_k|.
// Sort, shift the i-th smallest by t_fuse*(K+1-2i), restore monotonicity by
// pool-adjacent-violators averaging, unsort, then soft-threshold.
std::vector<double> clique_fusion_prox(const std::vector<double>& x, double t_fuse,
                                       double t_sparse);

// Exact minimizer of n tr(S W) - n jw log|W| + (rho/2)||W - A||_F^2 via the
// eigendecomposition of rho A - n S; always positive definite.
Matrix admm_omega_update(const Matrix& s, const Matrix& a, double rho, double n_obs,
                         double logdet_weight);

struct JglResult {
  PrecisionSet omega;
  int iterations = 0;
  bool converged = false;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double min_eigenvalue = 0.0;  // smallest eigenvalue across returned matrices
};

// Fused joint graphical lasso on the residual covariances: ADMM alternating
// the per-class log-det update, the elementwise cross-class fusion prox on
// the consensus copy, and the dual ascent step. Returns the consensus
// variable, which carries the exact zeros.
JglResult jgl_fit(const std::vector<Matrix>& s, double gamma1, double gamma2, int n_obs,
                  const AdmmOptions& options = {}, const PrecisionSet* init = nullptr);

// Grid-search entry point: carries the dual state across calls for warm starts.
struct AdmmState {
  PrecisionSet consensus;  // Z
  PrecisionSet dual;       // U
};
JglResult jgl_fit_warm(const std::vector<Matrix>& s, double gamma1, double gamma2, int n_obs,
                       const AdmmOptions& options, AdmmState& state);

}  // namespace mcvar
