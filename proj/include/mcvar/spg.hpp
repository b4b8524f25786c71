#pragma once

#include "mcvar/panel.hpp"
#include "mcvar/penalties.hpp"

#include <utility>
#include <vector>

namespace mcvar {

struct SpgOptions {
  double mu = 1e-3;      // smoothing parameter of the fusion surrogate
  int max_iter = 2000;   // inner iteration cap
  double tol = 1e-6;     // relative objective-change stopping tolerance
};

// Largest eigenvalue of a symmetric PSD matrix by power iteration.
double power_lambda_max(const Matrix& sym, double tol = 1e-8, int max_iter = 500);

// Generalized least squares loss g(beta) = sum_k e' (Omega (x) I_N) e and its
// gradient, evaluated through per-class Gram matrices so the cost per call is
// independent of N and the N*J x N*J weight is never formed.
class GlsObjective {
 public:
  GlsObjective(const StackedDesign& design, const PrecisionSet& omega);

  double value(const CoefficientSet& beta) const;
  // Returns the value; grad is resized/overwritten to match beta.
  double value_grad(const CoefficientSet& beta, CoefficientSet& grad) const;

  // max_k lammax(X0'X0) * lammax(Omega), the curvature part of the step size.
  double spectral_bound() const { return spectral_bound_; }
  const PanelSpec& spec() const { return spec_; }
  const PrecisionSet& omega() const { return omega_; }

 private:
  PanelSpec spec_;
  PrecisionSet omega_;
  std::vector<Matrix> gram_;  // X0'X0 per class
  std::vector<Matrix> xty_;   // X0'Y per class
  std::vector<Matrix> yty_;   // Y'Y per class
  double spectral_bound_ = 0.0;
};

// Smooth approximation of the fusion penalty: per coupling row with
// z = row . beta, the value contributes z^2/(2 mu) when |z| <= mu and
// |z| - mu/2 otherwise; the gradient is C' clip(z/mu, -1, 1).
std::pair<double, CoefficientSet> smooth_fusion(const CoefficientSet& beta,
                                                const FusionCoupling& coupling, double mu);

// Loss value and gradient of g alone (convenience wrapper over GlsObjective).
std::pair<double, CoefficientSet> gls_loss_grad(const CoefficientSet& beta,
                                                const StackedDesign& design,
                                                const PrecisionSet& omega);

// Upper bound on the gradient Lipschitz constant of g + h_mu:
//   2 max_k lammax(X0'X0) lammax(Omega) + lambda1^2 K / mu.
double lipschitz_bound(const StackedDesign& design, const PrecisionSet& omega,
                       const FusionCoupling& coupling, double mu);

struct SpgResult {
  CoefficientSet beta;
  double objective = 0.0;  // smoothed objective at the returned iterate
  int iterations = 0;
  bool converged = false;
};

// Accelerated proximal gradient on g + h_mu + lambda2 ||.||_1. The proximal
// step soft-thresholds coordinatewise, so exact zeros are produced. Returns
// the best iterate seen (including the starting point).
SpgResult spg_fit(const StackedDesign& design, const PrecisionSet& omega, double lambda1,
                  double lambda2, const SpgOptions& options = {},
                  const CoefficientSet* init = nullptr);

// Core used by the grid search: the objective and coupling are built once by
// the caller and shared across cells.
SpgResult spg_fit(const GlsObjective& objective, const FusionCoupling* coupling, double lambda2,
                  const SpgOptions& options, const CoefficientSet& init);

}  // namespace mcvar
