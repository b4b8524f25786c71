#include "mcvar/fit.hpp"

#include "mcvar/simulation.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <cmath>

using namespace mcvar;

namespace {

bool bitwise_equal(const FitResult& a, const FitResult& b) {
  if (a.lambda1 != b.lambda1 || a.lambda2 != b.lambda2 || a.gamma1 != b.gamma1 ||
      a.gamma2 != b.gamma2 || a.outer_iterations != b.outer_iterations ||
      a.converged != b.converged)
    return false;
  if (a.objective_trace != b.objective_trace) return false;
  for (size_t k = 0; k < a.beta.coef.size(); ++k) {
    if ((a.beta.coef[k].array() != b.beta.coef[k].array()).any()) return false;
    if ((a.omega[k].array() != b.omega[k].array()).any()) return false;
  }
  return true;
}

double cross_class_range(const CoefficientSet& beta) {
  double worst = 0.0;
  for (int idx = 0; idx < beta.coef[0].size(); ++idx) {
    double lo = beta.coef[0](idx), hi = lo;
    for (const auto& m : beta.coef) {
      lo = std::min(lo, m(idx));
      hi = std::max(hi, m(idx));
    }
    worst = std::max(worst, hi - lo);
  }
  return worst;
}

}  // namespace

TEST_SUITE("fit") {

TEST_CASE("noiseless data is recovered through the full pipeline") {
  // exact recursion, tiny penalties: the estimate must sit on the truth.
  // every series starts at unit scale so the decaying data still excites
  // all predictor directions; the precision stage is skipped because zero
  // residuals leave the log-det criterion unbounded
  Matrix base(3, 3);
  base << 0.5, 0.25, 0.1, 0.0, 0.5, 0.2, 0.0, 0.0, 0.5;
  std::vector<Matrix> bs{base, base * 0.9, base * 1.1};
  MultiClassPanel panel;
  panel.spec = PanelSpec{3, 3, 200, 1};
  for (int k = 0; k < 3; ++k) {
    Matrix data(200, 3);
    Vector y(3);
    y << 1.5, -1.2, 1.0 + 0.3 * k;
    data.row(0) = y.transpose();
    for (int t = 1; t < 200; ++t) {
      y = bs[k] * y;
      data.row(t) = y.transpose();
    }
    panel.data.push_back(std::move(data));
  }
  panel = center_panel(panel).first;
  RegularizationGrid grid;
  grid.lambda1 = {1e-6, 1e-4};
  grid.lambda2 = {1e-6, 1e-4};
  FitOptions options;
  options.skip_omega_stage = true;
  options.spg.tol = 1e-10;
  options.spg.max_iter = 20000;
  FitResult fit = fit_multiclass(panel, grid, options);
  for (int k = 0; k < 3; ++k)
    CHECK((fit.beta.lag_matrix(k, 0) - bs[k]).cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("one class makes the two estimators coincide bitwise") {
  Matrix b(2, 2);
  b << 0.5, 0.2, -0.1, 0.4;
  MultiClassPanel panel = testing::make_var1_panel({b}, 60, 1.0, 29);
  panel = center_panel(panel).first;
  FitResult multi = fit_multiclass(panel);
  FitResult single = fit_singleclass(panel);
  CHECK(bitwise_equal(multi, single));
}

TEST_CASE("all-zero data yields an empty model and diagonal precisions") {
  MultiClassPanel panel;
  panel.spec = PanelSpec{2, 2, 20, 1};
  panel.data.assign(2, Matrix::Zero(20, 2));
  FitResult fit = fit_multiclass(panel);
  for (const auto& m : fit.beta.coef) CHECK(m.cwiseAbs().maxCoeff() == 0.0);
  for (const Matrix& w : fit.omega)
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c)
        if (r != c) CHECK(std::abs(w(r, c)) < 1e-12);
}

TEST_CASE("penalized fits produce genuine sparsity on noisy data") {
  SimulationDesign design;
  design.spec = PanelSpec{3, 3, 60, 1};
  GeneratedPanel gp = gen_design(design, 404);
  MultiClassPanel panel = center_panel(gp.panel).first;
  FitResult fit = fit_singleclass(panel);
  long zeros = 0, nonzeros = 0;
  for (const auto& m : fit.beta.coef)
    for (int idx = 0; idx < m.size(); ++idx)
      (m(idx) == 0.0 ? zeros : nonzeros) += 1;
  CHECK(zeros > 0);
  CHECK(nonzeros > 0);
}

TEST_CASE("unpenalized single-class fit reduces to least squares") {
  Matrix b1(2, 2), b2(2, 2);
  b1 << 0.5, 0.2, 0.0, 0.4;
  b2 << 0.3, -0.1, 0.2, 0.5;
  MultiClassPanel panel = testing::make_var1_panel({b1, b2}, 50, 1.0, 37);
  panel = center_panel(panel).first;
  RegularizationGrid grid;
  grid.lambda1 = {0.0};
  grid.lambda2 = {0.0};
  FitOptions options;
  options.skip_omega_stage = true;
  options.spg.tol = 1e-12;
  options.spg.max_iter = 50000;
  FitResult penalized = fit_singleclass(panel, grid, options);
  FitResult ls = fit_ls(panel, 1);
  for (int k = 0; k < 2; ++k)
    CHECK((penalized.beta.coef[k] - ls.beta.coef[k]).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("objective trace is non-increasing across outer iterations") {
  SimulationDesign design;
  design.spec = PanelSpec{3, 3, 80, 1};
  GeneratedPanel gp = gen_design(design, 505);
  MultiClassPanel panel = center_panel(gp.panel).first;
  FitOptions options;
  options.spg.mu = 1e-5;
  options.outer_tol = 1e-4;  // force several outer iterations
  FitResult fit = fit_multiclass(panel, {}, options);
  REQUIRE(fit.objective_trace.size() >= 2);
  for (size_t i = 1; i < fit.objective_trace.size(); ++i)
    CHECK(fit.objective_trace[i] <=
          fit.objective_trace[i - 1] + 1e-8 * std::abs(fit.objective_trace[i - 1]));
}

TEST_CASE("a huge pinned fusion weight equalizes the classes") {
  SimulationDesign design;
  design.spec = PanelSpec{3, 2, 60, 1};
  GeneratedPanel gp = gen_design(design, 606);
  MultiClassPanel panel = center_panel(gp.panel).first;
  StackedDesign d = build_stacked(panel, 1);
  std::vector<double> lambda = default_lambda_grid(d);
  RegularizationGrid grid;
  grid.lambda1 = {1e4};
  grid.lambda2 = {lambda[3]};
  FitResult fit = fit_multiclass(panel, grid, {});
  CHECK(cross_class_range(fit.beta) < 1e-3);
}

TEST_CASE("zero fusion grids reproduce the single-class path bitwise") {
  SimulationDesign design;
  design.spec = PanelSpec{3, 2, 50, 1};
  GeneratedPanel gp = gen_design(design, 707);
  MultiClassPanel panel = center_panel(gp.panel).first;
  RegularizationGrid grid;
  grid.lambda1 = {0.0};
  grid.gamma1 = {0.0};
  FitResult multi = fit_multiclass(panel, grid, {});
  FitResult single = fit_singleclass(panel, {}, {});
  CHECK(bitwise_equal(multi, single));
}

TEST_CASE("scalar least squares matches the closed form") {
  Matrix b(1, 1);
  b << 0.6;
  MultiClassPanel panel = testing::make_var1_panel({b}, 30, 0.7, 41);
  panel = center_panel(panel).first;
  FitResult ls = fit_ls(panel, 1);
  StackedDesign d = build_stacked(panel, 1);
  double num = 0.0, den = 0.0;
  for (int t = 0; t < d.spec.obs_count(); ++t) {
    num += d.targets[0](t, 0) * d.predictors[0](t, 0);
    den += d.predictors[0](t, 0) * d.predictors[0](t, 0);
  }
  CHECK(ls.beta.coef[0](0, 0) == doctest::Approx(num / den).epsilon(1e-12));
}

TEST_CASE("least squares matches an orthogonal-decomposition oracle") {
  Matrix b(3, 3);
  b << 0.4, 0.1, 0.0, 0.0, 0.5, 0.2, -0.1, 0.0, 0.3;
  MultiClassPanel panel = testing::make_var1_panel({b, b}, 40, 1.0, 43);
  panel = center_panel(panel).first;
  FitResult ls = fit_ls(panel, 1);
  StackedDesign d = build_stacked(panel, 1);
  for (int k = 0; k < 2; ++k) {
    Matrix qr = d.predictors[k].colPivHouseholderQr().solve(d.targets[k]);
    CHECK((ls.beta.coef[k] - qr).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("least squares recovers noiseless coefficients exactly") {
  Matrix b(2, 2);
  b << 0.5, 0.25, 0.0, 0.4;
  MultiClassPanel panel = testing::make_var1_panel({b}, 30, 0.0, 47);
  FitResult ls = fit_ls(panel, 1);
  CHECK((ls.beta.lag_matrix(0, 0) - b).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("least squares rejects underdetermined panels") {
  MultiClassPanel panel;
  panel.spec = PanelSpec{1, 3, 4, 1};  // N = 3 <= J*P = 3
  panel.data.assign(1, Matrix::Random(4, 3));
  CHECK_THROWS_AS(fit_ls(panel, 1), std::invalid_argument);
}

TEST_CASE("least squares reports singular normal equations") {
  MultiClassPanel panel;
  panel.spec = PanelSpec{1, 2, 10, 1};
  panel.data.assign(1, Matrix::Zero(10, 2));
  CHECK_THROWS_AS(fit_ls(panel, 1), std::runtime_error);
}

}  // TEST_SUITE
