#pragma once

#include "mcvar/bic.hpp"
#include "mcvar/jgl.hpp"
#include "mcvar/panel.hpp"
#include "mcvar/spg.hpp"

#include <string>
#include <vector>

namespace mcvar {

struct FitOptions {
  SpgOptions spg;
  AdmmOptions admm;
  double outer_tol = 1e-2;        // relative objective change across outer iterations
  int max_outer = 20;
  bool skip_omega_stage = false;  // keep Omega = I (coefficient stage only)
};

struct FitResult {
  PanelSpec spec;
  CoefficientSet beta;
  PrecisionSet omega;
  double lambda1 = 0.0, lambda2 = 0.0;
  double gamma1 = 0.0, gamma2 = 0.0;
  std::vector<double> objective_trace;  // joint objective after each outer iteration
  int outer_iterations = 0;
  bool converged = false;
  bool omega_identity_fallback = false;  // least squares: residual covariance not invertible
  std::vector<std::string> series_names, class_names;
};

// Full penalized objective: GLS loss, the log-det terms, and the four
// penalties at the given weights.
double joint_objective(const CoefficientSet& beta, const PrecisionSet& omega,
                       const StackedDesign& design, double lambda1, double lambda2,
                       double gamma1, double gamma2, double logdet_weight);

// Alternates the coefficient stage and the precision stage starting from
// Omega = I. Penalty weights are selected by BIC grid search on the first
// outer iteration and held fixed afterwards; the loop stops when the
// relative objective change drops below options.outer_tol.
FitResult fit_multiclass(const MultiClassPanel& panel, const RegularizationGrid& grid = {},
                         const FitOptions& options = {});

// Same protocol with the fusion weights pinned to zero.
FitResult fit_singleclass(const MultiClassPanel& panel, const RegularizationGrid& grid = {},
                          const FitOptions& options = {});

// Per-class ordinary least squares; Omega is the inverse residual covariance
// when invertible, the identity (with a flag) otherwise.
FitResult fit_ls(const MultiClassPanel& panel, int order);

}  // namespace mcvar
