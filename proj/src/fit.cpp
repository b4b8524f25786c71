#include "mcvar/fit.hpp"

#include "mcvar/penalties.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <stdexcept>

namespace mcvar {

namespace {

double logdet_spd(const Matrix& w) {
  Eigen::LLT<Matrix> llt(w);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("joint objective: precision matrix is not positive definite");
  return 2.0 * Matrix(llt.matrixL()).diagonal().array().log().sum();
}

FitResult fit_penalized(const MultiClassPanel& panel, RegularizationGrid grid,
                        const FitOptions& options, bool fused) {
  panel.validate();
  const PanelSpec& spec = panel.spec;
  StackedDesign design = build_stacked(panel);
  const int n = spec.obs_count();
  const double jw = logdet_multiplier(options.admm.logdet, spec.num_series);

  // fusion is undefined with one class; single-class mode pins it off
  if (!fused || spec.num_classes < 2) {
    grid.lambda1 = {0.0};
    grid.gamma1 = {0.0};
  }

  FitResult result;
  result.spec = design.spec;
  result.series_names = panel.series_names;
  result.class_names = panel.class_names;
  result.omega = identity_precision(spec.num_classes, spec.num_series);

  double prev_obj = 0.0;
  for (int outer = 1; outer <= options.max_outer; ++outer) {
    result.outer_iterations = outer;

    try {
      if (outer == 1) {
        BetaSelection sel = grid_search_beta(design, result.omega, grid, options.spg);
        result.lambda1 = sel.lambda1;
        result.lambda2 = sel.lambda2;
        result.beta = std::move(sel.beta);
      } else {
        result.beta = spg_fit(design, result.omega, result.lambda1, result.lambda2, options.spg,
                              &result.beta)
                          .beta;
      }
    } catch (const std::exception& e) {
      throw std::runtime_error("coefficient stage (outer iteration " + std::to_string(outer) +
                               "): " + e.what());
    }

    if (!options.skip_omega_stage) {
      try {
        std::vector<Matrix> s = residual_covariance(residuals(design, result.beta));
        if (outer == 1) {
          OmegaSelection sel = grid_search_omega(s, grid, n, options.admm);
          result.gamma1 = sel.gamma1;
          result.gamma2 = sel.gamma2;
          result.omega = std::move(sel.omega);
        } else {
          result.omega =
              jgl_fit(s, result.gamma1, result.gamma2, n, options.admm, &result.omega).omega;
        }
      } catch (const std::exception& e) {
        throw std::runtime_error("precision stage (outer iteration " + std::to_string(outer) +
                                 "): " + e.what());
      }
    }

    double obj = joint_objective(result.beta, result.omega, design, result.lambda1,
                                 result.lambda2, result.gamma1, result.gamma2, jw);
    result.objective_trace.push_back(obj);
    if (outer >= 2 &&
        std::abs(prev_obj - obj) < options.outer_tol * std::max(std::abs(prev_obj), 1e-12)) {
      result.converged = true;
      break;
    }
    prev_obj = obj;
  }
  return result;
}

}  // namespace

double joint_objective(const CoefficientSet& beta, const PrecisionSet& omega,
                       const StackedDesign& design, double lambda1, double lambda2,
                       double gamma1, double gamma2, double logdet_weight) {
  GlsObjective objective(design, omega);
  double total = objective.value(beta);
  const double n = design.spec.obs_count();
  for (const Matrix& w : omega) total -= n * logdet_weight * logdet_spd(w);
  total += lambda1 * eval_pairwise_fusion(beta);
  total += lambda2 * eval_l1(beta);
  total += gamma1 * eval_pairwise_fusion(omega);
  total += gamma2 * eval_l1(omega);
  return total;
}

FitResult fit_multiclass(const MultiClassPanel& panel, const RegularizationGrid& grid,
                         const FitOptions& options) {
  return fit_penalized(panel, grid, options, true);
}

FitResult fit_singleclass(const MultiClassPanel& panel, const RegularizationGrid& grid,
                          const FitOptions& options) {
  return fit_penalized(panel, grid, options, false);
}

FitResult fit_ls(const MultiClassPanel& panel, int order) {
  panel.validate();
  StackedDesign design = build_stacked(panel, order);
  const PanelSpec& spec = design.spec;
  const int n = spec.obs_count();
  if (n <= spec.coef_rows())
    throw std::invalid_argument("fit_ls: least squares is underdetermined (N <= J*P)");

  FitResult result;
  result.spec = spec;
  result.series_names = panel.series_names;
  result.class_names = panel.class_names;
  result.beta = CoefficientSet::zero(spec);
  result.omega = identity_precision(spec.num_classes, spec.num_series);
  result.converged = true;
  result.outer_iterations = 1;

  for (int k = 0; k < spec.num_classes; ++k) {
    const Matrix& x0 = design.predictors[k];
    Matrix gram = x0.transpose() * x0;
    Eigen::LLT<Matrix> llt(gram);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("fit_ls: singular normal equations in class " +
                               std::to_string(k + 1));
    result.beta.coef[k] = llt.solve(x0.transpose() * design.targets[k]);
  }

  std::vector<Matrix> s = residual_covariance(residuals(design, result.beta));
  for (int k = 0; k < spec.num_classes; ++k) {
    Eigen::LLT<Matrix> llt(s[k]);
    if (llt.info() == Eigen::Success) {
      result.omega[k] = llt.solve(Matrix::Identity(spec.num_series, spec.num_series));
    } else {
      result.omega_identity_fallback = true;
    }
  }
  result.objective_trace.push_back(joint_objective(result.beta, result.omega, design, 0, 0, 0, 0,
                                                   spec.num_series));
  return result;
}

}  // namespace mcvar
