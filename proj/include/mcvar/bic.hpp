#pragma once

#include "mcvar/jgl.hpp"
#include "mcvar/panel.hpp"
#include "mcvar/spg.hpp"

#include <vector>

namespace mcvar {

// Candidate penalty values. Empty lists are filled from the data: lambda
// grids span [0.01, 1] * max|2 X0'Y| (the smallest weight that zeroes every
// coefficient), gamma grids span [0.01, 1] * N * max|off-diagonal S|, both
// with 10 log-spaced points.
struct RegularizationGrid {
  std::vector<double> lambda1;
  std::vector<double> lambda2;
  std::vector<double> gamma1;
  std::vector<double> gamma2;
};

std::vector<double> log_spaced(double lo, double hi, int count);
std::vector<double> default_lambda_grid(const StackedDesign& design);
std::vector<double> default_gamma_grid(const std::vector<Matrix>& s, int n_obs);

// Selection criterion for the coefficient stage: 2 g(beta) + df log(N) with
// df the number of nonzero coefficients. Small loss and few parameters win.
double bic_beta(const CoefficientSet& beta, const StackedDesign& design,
                const PrecisionSet& omega);

// Criterion for the precision stage:
//   sum_k [N tr(S W) - N log|W|] + log(N) sum_k (J + offdiagonal support).
double bic_omega(const PrecisionSet& omega, const std::vector<Matrix>& s, int n_obs);

struct BetaSelection {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  CoefficientSet beta;
  double bic = 0.0;
};

// Fits every (lambda1, lambda2) cell with warm starts and returns the
// minimum-BIC cell; exact ties go to the larger (lambda1, lambda2) pair.
BetaSelection grid_search_beta(const StackedDesign& design, const PrecisionSet& omega,
                               const RegularizationGrid& grid, const SpgOptions& options = {});

struct OmegaSelection {
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  PrecisionSet omega;
  double bic = 0.0;
};

OmegaSelection grid_search_omega(const std::vector<Matrix>& s, const RegularizationGrid& grid,
                                 int n_obs, const AdmmOptions& options = {});

}  // namespace mcvar
