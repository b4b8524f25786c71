#include "mcvar/bic.hpp"

#include <Eigen/Cholesky>

#include <algorithm>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace mcvar {

std::vector<double> log_spaced(double lo, double hi, int count) {
  if (lo <= 0 || hi < lo || count < 1)
    throw std::invalid_argument("log_spaced: need 0 < lo <= hi and count >= 1");
  std::vector<double> out(count);
  if (count == 1) {
    out[0] = hi;
    return out;
  }
  const double step = (std::log(hi) - std::log(lo)) / (count - 1);
  for (int i = 0; i < count; ++i) out[i] = std::exp(std::log(lo) + step * i);
  return out;
}

std::vector<double> default_lambda_grid(const StackedDesign& design) {
  double peak = 0.0;
  for (size_t k = 0; k < design.predictors.size(); ++k) {
    Matrix xty = design.predictors[k].transpose() * design.targets[k];
    peak = std::max(peak, 2.0 * xty.cwiseAbs().maxCoeff());
  }
  if (peak <= 0) return {0.0};  // degenerate data, penalties are irrelevant
  return log_spaced(0.01 * peak, peak, 10);
}

std::vector<double> default_gamma_grid(const std::vector<Matrix>& s, int n_obs) {
  double peak = 0.0;
  for (const Matrix& m : s) {
    const int j = static_cast<int>(m.rows());
    for (int c = 0; c < j; ++c)
      for (int r = 0; r < j; ++r)
        if (r != c) peak = std::max(peak, std::abs(m(r, c)));
  }
  peak *= n_obs;
  if (peak <= 0) return {0.0};
  return log_spaced(0.01 * peak, peak, 10);
}

double bic_beta(const CoefficientSet& beta, const StackedDesign& design,
                const PrecisionSet& omega) {
  GlsObjective objective(design, omega);
  const double df = static_cast<double>(beta.nonzero_count());
  return 2.0 * objective.value(beta) + df * std::log(static_cast<double>(design.spec.obs_count()));
}

double bic_omega(const PrecisionSet& omega, const std::vector<Matrix>& s, int n_obs) {
  if (omega.size() != s.size())
    throw std::invalid_argument("bic_omega: class counts do not match");
  const double n = n_obs;
  double total = 0.0;
  double df = 0.0;
  for (size_t k = 0; k < omega.size(); ++k) {
    const Matrix& w = omega[k];
    const int j = static_cast<int>(w.rows());
    Eigen::LLT<Matrix> llt(w);
    if (llt.info() != Eigen::Success)
      throw std::invalid_argument("bic_omega: precision matrix is not positive definite");
    double logdet = 2.0 * Matrix(llt.matrixL()).diagonal().array().log().sum();
    total += n * s[k].cwiseProduct(w).sum() - n * logdet;
    df += j;
    for (int c = 0; c < j; ++c)
      for (int r = 0; r < c; ++r)
        if (w(r, c) != 0.0) df += 1.0;
  }
  return total + std::log(n) * df;
}

namespace {

// candidate lists are used sorted ascending, duplicates dropped
std::vector<double> normalize_grid(std::vector<double> values, const char* name) {
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  for (double v : values)
    if (v < 0 || !std::isfinite(v))
      throw std::invalid_argument(std::string(name) + ": candidate weights must be finite and >= 0");
  return values;
}

}  // namespace

BetaSelection grid_search_beta(const StackedDesign& design, const PrecisionSet& omega,
                               const RegularizationGrid& grid, const SpgOptions& options) {
  const int kc = design.spec.num_classes;
  std::vector<double> l1s = normalize_grid(
      grid.lambda1.empty() ? default_lambda_grid(design) : grid.lambda1, "lambda1 grid");
  std::vector<double> l2s = normalize_grid(
      grid.lambda2.empty() ? default_lambda_grid(design) : grid.lambda2, "lambda2 grid");
  if (kc < 2) l1s = {0.0};  // fusion is undefined for a single class
  if (l1s.empty() || l2s.empty())
    throw std::invalid_argument("grid_search_beta: empty candidate grid");

  GlsObjective objective(design, omega);
  const double log_n = std::log(static_cast<double>(design.spec.obs_count()));

  BetaSelection best;
  best.bic = std::numeric_limits<double>::infinity();
  bool have_best = false;

  // scan lambda1 ascending; within a row, lambda2 descending so the sparse
  // end warm-starts from zero; each row starts from the previous row's first cell
  CoefficientSet row_start = CoefficientSet::zero(design.spec);
  for (double l1 : l1s) {
    FusionCoupling coupling;
    const bool fuse = kc >= 2 && l1 > 0;
    if (fuse) coupling = build_coupling(design.spec, l1);
    CoefficientSet warm = row_start;
    bool first_in_row = true;
    for (auto it = l2s.rbegin(); it != l2s.rend(); ++it) {
      double l2 = *it;
      SpgResult fit = spg_fit(objective, fuse ? &coupling : nullptr, l2, options, warm);
      warm = fit.beta;
      if (first_in_row) {
        row_start = fit.beta;
        first_in_row = false;
      }
      double df = static_cast<double>(fit.beta.nonzero_count());
      double bic = 2.0 * objective.value(fit.beta) + df * log_n;
      bool better = bic < best.bic;
      bool tie = bic == best.bic &&
                 (l1 > best.lambda1 || (l1 == best.lambda1 && l2 > best.lambda2));
      if (!have_best || better || tie) {
        best = BetaSelection{l1, l2, fit.beta, bic};
        have_best = true;
      }
    }
  }
  return best;
}

OmegaSelection grid_search_omega(const std::vector<Matrix>& s, const RegularizationGrid& grid,
                                 int n_obs, const AdmmOptions& options) {
  const int kc = static_cast<int>(s.size());
  std::vector<double> g1s = normalize_grid(
      grid.gamma1.empty() ? default_gamma_grid(s, n_obs) : grid.gamma1, "gamma1 grid");
  std::vector<double> g2s = normalize_grid(
      grid.gamma2.empty() ? default_gamma_grid(s, n_obs) : grid.gamma2, "gamma2 grid");
  if (kc < 2) g1s = {0.0};
  if (g1s.empty() || g2s.empty())
    throw std::invalid_argument("grid_search_omega: empty candidate grid");

  OmegaSelection best;
  best.bic = std::numeric_limits<double>::infinity();
  bool have_best = false;

  AdmmState state;
  for (double g1 : g1s) {
    for (auto it = g2s.rbegin(); it != g2s.rend(); ++it) {
      double g2 = *it;
      JglResult fit = jgl_fit_warm(s, g1, g2, n_obs, options, state);
      double bic;
      try {
        bic = bic_omega(fit.omega, s, n_obs);
      } catch (const std::invalid_argument&) {
        continue;  // non-PD consensus (unconverged cell): not a candidate
      }
      bool better = bic < best.bic;
      bool tie = bic == best.bic &&
                 (g1 > best.gamma1 || (g1 == best.gamma1 && g2 > best.gamma2));
      if (!have_best || better || tie) {
        best = OmegaSelection{g1, g2, fit.omega, bic};
        have_best = true;
      }
    }
  }
  if (!have_best) throw std::runtime_error("grid_search_omega: no grid cell produced a usable fit");
  return best;
}

}  // namespace mcvar
