#include "mcvar/spg.hpp"

#include "mcvar/bic.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace mcvar;

namespace {

// One-dimensional two-class toy: sufficient statistics of the exact
// objective sum_k (a_k b_k^2 - 2 c_k b_k + d_k) + l1 |b_1 - b_2| + l2 (|b_1| + |b_2|).
struct ScalarToy {
  double a[2], c[2], d[2];
  double l1, l2;

  double exact(double b1, double b2) const {
    double f = a[0] * b1 * b1 - 2 * c[0] * b1 + d[0];
    f += a[1] * b2 * b2 - 2 * c[1] * b2 + d[1];
    return f + l1 * std::abs(b1 - b2) + l2 * (std::abs(b1) + std::abs(b2));
  }
};

ScalarToy make_toy(const StackedDesign& design, double l1, double l2) {
  ScalarToy toy{};
  for (int k = 0; k < 2; ++k) {
    toy.a[k] = design.predictors[k].squaredNorm();
    toy.c[k] = (design.predictors[k].transpose() * design.targets[k])(0, 0);
    toy.d[k] = design.targets[k].squaredNorm();
  }
  toy.l1 = l1;
  toy.l2 = l2;
  return toy;
}

// central finite differences of the smoothed objective g + h_mu
CoefficientSet fd_gradient(const GlsObjective& objective, const FusionCoupling* coupling,
                           double mu, const CoefficientSet& beta) {
  CoefficientSet grad = CoefficientSet::zero(beta.spec);
  auto value = [&](const CoefficientSet& b) {
    double f = objective.value(b);
    if (coupling && !coupling->empty()) f += smooth_fusion(b, *coupling, mu).first;
    return f;
  };
  for (size_t k = 0; k < beta.coef.size(); ++k) {
    for (int idx = 0; idx < beta.coef[k].size(); ++idx) {
      CoefficientSet plus = beta, minus = beta;
      double h = 1e-6 * std::max(1.0, std::abs(beta.coef[k](idx)));
      plus.coef[k](idx) += h;
      minus.coef[k](idx) -= h;
      grad.coef[k](idx) = (value(plus) - value(minus)) / (2 * h);
    }
  }
  return grad;
}

StackedDesign toy_design(unsigned seed, double b1 = 0.6, double b2 = 0.25) {
  Matrix m1(1, 1), m2(1, 1);
  m1 << b1;
  m2 << b2;
  MultiClassPanel panel = testing::make_var1_panel({m1, m2}, 20, 0.5, seed);
  panel = center_panel(panel).first;
  return build_stacked(panel, 1);
}

}  // namespace

TEST_SUITE("spg") {

TEST_CASE("smooth fusion vanishes when classes agree") {
  PanelSpec spec{3, 2, 10, 1};
  FusionCoupling c = build_coupling(spec, 1.5);
  CoefficientSet beta = CoefficientSet::zero(spec);
  for (auto& m : beta.coef) m.setConstant(0.7);
  auto [value, grad] = smooth_fusion(beta, c, 1e-3);
  CHECK(value == 0.0);
  for (const auto& g : grad.coef) CHECK(g.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("smooth fusion matches the closed form in the quadratic branch") {
  PanelSpec spec{2, 1, 10, 1};
  FusionCoupling c = build_coupling(spec, 1.0);
  CoefficientSet beta = CoefficientSet::zero(spec);
  beta.coef[0](0, 0) = 0.5;
  auto [value, grad] = smooth_fusion(beta, c, 1.0);
  CHECK(value == doctest::Approx(0.125).epsilon(1e-14));
  CHECK(grad.coef[0](0, 0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(grad.coef[1](0, 0) == doctest::Approx(-0.5).epsilon(1e-14));
}

TEST_CASE("smooth fusion matches the closed form in the linear branch") {
  PanelSpec spec{2, 1, 10, 1};
  FusionCoupling c = build_coupling(spec, 1.0);
  CoefficientSet beta = CoefficientSet::zero(spec);
  beta.coef[0](0, 0) = 0.5;
  auto [value, grad] = smooth_fusion(beta, c, 0.1);
  CHECK(value == doctest::Approx(0.45).epsilon(1e-14));
  CHECK(grad.coef[0](0, 0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(grad.coef[1](0, 0) == doctest::Approx(-1.0).epsilon(1e-14));
}

TEST_CASE("smooth fusion rejects nonpositive mu") {
  PanelSpec spec{2, 1, 10, 1};
  FusionCoupling c = build_coupling(spec, 1.0);
  CoefficientSet beta = CoefficientSet::zero(spec);
  CHECK_THROWS_AS(smooth_fusion(beta, c, 0.0), std::invalid_argument);
}

TEST_CASE("loss and gradient vanish at the truth on noiseless data") {
  Matrix b(2, 2);
  b << 0.5, 0.2, 0.0, 0.4;
  MultiClassPanel panel = testing::make_var1_panel({b}, 10, 0.0, 4);
  StackedDesign d = build_stacked(panel, 1);
  CoefficientSet beta = testing::coefficients_from_lag1(d.spec, {b});
  auto [value, grad] = gls_loss_grad(beta, d, identity_precision(1, 2));
  CHECK(std::abs(value) < 1e-12);
  CHECK(grad.coef[0].cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("identity weighting reduces the loss to least squares") {
  Matrix b(2, 2);
  b << 0.5, 0.2, -0.1, 0.4;
  MultiClassPanel panel = testing::make_var1_panel({b, b}, 15, 1.0, 6);
  StackedDesign d = build_stacked(panel, 1);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> gauss;
  CoefficientSet beta = CoefficientSet::zero(d.spec);
  for (auto& m : beta.coef)
    m = Matrix::NullaryExpr(m.rows(), m.cols(), [&] { return gauss(rng); });
  double value = gls_loss_grad(beta, d, identity_precision(2, 2)).first;
  double direct = 0.0;
  for (int k = 0; k < 2; ++k)
    direct += (d.targets[k] - d.predictors[k] * beta.coef[k]).squaredNorm();
  CHECK(value == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("scalar loss value and gradient agree with hand computation") {
  // N=2, J=1: y = (1, 2), x = (3, -1), omega = (2)
  StackedDesign d;
  d.spec = PanelSpec{1, 1, 3, 1};
  d.targets.push_back((Matrix(2, 1) << 1.0, 2.0).finished());
  d.predictors.push_back((Matrix(2, 1) << 3.0, -1.0).finished());
  PrecisionSet omega{(Matrix(1, 1) << 2.0).finished()};
  CoefficientSet beta = CoefficientSet::zero(d.spec);
  beta.coef[0](0, 0) = 0.5;
  auto [value, grad] = gls_loss_grad(beta, d, omega);
  // residuals: 1 - 1.5 = -0.5, 2 + 0.5 = 2.5; value = 2*(0.25 + 6.25)
  CHECK(value == doctest::Approx(13.0).epsilon(1e-14));
  // gradient: -2 * 2 * (x.e) = -4 * (3*-0.5 + -1*2.5) = 16
  CHECK(grad.coef[0](0, 0) == doctest::Approx(16.0).epsilon(1e-12));
}

TEST_CASE("gradient matches central finite differences") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> gauss;
  for (int trial = 0; trial < 8; ++trial) {
    int kc = 1 + trial % 3;
    int j = 1 + trial % 2;
    int p = 1 + (trial / 2) % 2;
    int t_len = 6 + p;
    std::vector<Matrix> bs(kc, Matrix::Zero(j, j));
    MultiClassPanel panel = testing::make_var1_panel(bs, t_len, 1.0, 100 + trial);
    StackedDesign d = build_stacked(panel, p);
    PrecisionSet omega;
    for (int k = 0; k < kc; ++k) omega.push_back(testing::random_spd(j, 200 + trial + k));
    GlsObjective objective(d, omega);
    FusionCoupling coupling;
    if (kc >= 2) coupling = build_coupling(d.spec, 0.8);
    const FusionCoupling* cp = kc >= 2 ? &coupling : nullptr;
    double mu = 1e-2;

    CoefficientSet beta = CoefficientSet::zero(d.spec);
    for (auto& m : beta.coef)
      m = Matrix::NullaryExpr(m.rows(), m.cols(), [&] { return gauss(rng); });

    CoefficientSet grad;
    objective.value_grad(beta, grad);
    if (cp) {
      auto [hv, hg] = smooth_fusion(beta, *cp, mu);
      for (int k = 0; k < kc; ++k) grad.coef[k] += hg.coef[k];
    }
    CoefficientSet fd = fd_gradient(objective, cp, mu, beta);
    double err = 0.0, scale = 1.0;
    for (int k = 0; k < kc; ++k) {
      err = std::max(err, (grad.coef[k] - fd.coef[k]).cwiseAbs().maxCoeff());
      scale = std::max(scale, grad.coef[k].cwiseAbs().maxCoeff());
    }
    CHECK(err / scale < 1e-5);
  }
}

TEST_CASE("step bound matches the closed form on an orthonormal design") {
  StackedDesign d;
  d.spec = PanelSpec{2, 1, 3, 1};
  d.targets.assign(2, (Matrix(2, 1) << 1.0, 1.0).finished());
  d.predictors.assign(2, (Matrix(2, 1) << 1.0, 0.0).finished());
  PrecisionSet omega = identity_precision(2, 1);
  FusionCoupling c = build_coupling(d.spec, 1.0);
  CHECK(lipschitz_bound(d, omega, c, 0.1) == doctest::Approx(22.0).epsilon(1e-9));

  SUBCASE("no coupling leaves only the curvature term") {
    FusionCoupling none;
    CHECK(lipschitz_bound(d, omega, none, 0.1) == doctest::Approx(2.0).epsilon(1e-9));
  }
  SUBCASE("doubling mu halves the coupling term") {
    double l_mu = lipschitz_bound(d, omega, c, 0.1);
    double l_2mu = lipschitz_bound(d, omega, c, 0.2);
    CHECK(l_mu - 2.0 == doctest::Approx(2.0 * (l_2mu - 2.0)).epsilon(1e-9));
  }
}

TEST_CASE("unpenalized fit matches per-class least squares") {
  Matrix b1(2, 2), b2(2, 2);
  b1 << 0.5, 0.2, 0.0, 0.4;
  b2 << 0.3, -0.1, 0.2, 0.5;
  MultiClassPanel panel = testing::make_var1_panel({b1, b2}, 40, 1.0, 31);
  panel = center_panel(panel).first;
  StackedDesign d = build_stacked(panel, 1);
  PrecisionSet omega = identity_precision(2, 2);
  SpgOptions options;
  options.tol = 1e-12;
  options.max_iter = 20000;
  SpgResult fit = spg_fit(d, omega, 0.0, 0.0, options);
  for (int k = 0; k < 2; ++k) {
    Matrix gram = d.predictors[k].transpose() * d.predictors[k];
    Matrix ols = gram.llt().solve(d.predictors[k].transpose() * d.targets[k]);
    CHECK((fit.beta.coef[k] - ols).cwiseAbs().maxCoeff() < 1e-4);
  }
}

TEST_CASE("huge sparsity weight zeroes every coefficient exactly") {
  Matrix b(2, 2);
  b << 0.5, 0.2, -0.1, 0.4;
  MultiClassPanel panel = testing::make_var1_panel({b, b}, 20, 1.0, 12);
  panel = center_panel(panel).first;
  StackedDesign d = build_stacked(panel, 1);
  SpgResult fit = spg_fit(d, identity_precision(2, 2), 0.5, 1e6, {});
  for (const auto& m : fit.beta.coef) CHECK(m.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("toy problem reaches the brute-force optimum") {
  StackedDesign d = toy_design(77);
  const double l1 = 0.7, l2 = 0.9;
  ScalarToy toy = make_toy(d, l1, l2);

  // exhaustive grid over [-2,2]^2 at step 1e-3
  double best = std::numeric_limits<double>::infinity();
  for (int i = -2000; i <= 2000; ++i) {
    double b1 = i * 1e-3;
    for (int q = -2000; q <= 2000; ++q) {
      double f = toy.exact(b1, q * 1e-3);
      if (f < best) best = f;
    }
  }

  SpgOptions options;
  options.mu = 1e-4;
  options.tol = 1e-12;
  options.max_iter = 50000;
  SpgResult fit = spg_fit(d, identity_precision(2, 1), l1, l2, options);
  double f_hat = toy.exact(fit.beta.coef[0](0, 0), fit.beta.coef[1](0, 0));
  double gap_allow = options.mu * 1.0 / 2.0;  // one coupling row
  CHECK(f_hat >= best - 1e-9);                // grid minimum is near-optimal
  CHECK(f_hat - best <= 1e-4 + gap_allow);
}

TEST_CASE("smoothing gap stays within mu M / 2") {
  PanelSpec spec{3, 2, 10, 1};
  FusionCoupling c = build_coupling(spec, 1.3);
  std::mt19937_64 rng(41);
  std::normal_distribution<double> gauss;
  const double mu = 1e-2;
  const double bound = mu * c.row_count() / 2.0;
  for (int trial = 0; trial < 100; ++trial) {
    CoefficientSet beta = CoefficientSet::zero(spec);
    for (auto& m : beta.coef)
      m = Matrix::NullaryExpr(m.rows(), m.cols(), [&] { return gauss(rng); });
    double exact = 1.3 * eval_pairwise_fusion(beta);
    double smooth = smooth_fusion(beta, c, mu).first;
    CHECK(exact - smooth >= -1e-12);
    CHECK(exact - smooth <= bound + 1e-12);
  }
}

TEST_CASE("returned iterate is no worse than the zero start") {
  Matrix b1(2, 2), b2(2, 2);
  b1 << 0.5, 0.2, 0.0, 0.4;
  b2 << 0.3, -0.1, 0.2, 0.5;
  MultiClassPanel panel = testing::make_var1_panel({b1, b2}, 25, 1.0, 55);
  panel = center_panel(panel).first;
  StackedDesign d = build_stacked(panel, 1);
  PrecisionSet omega = identity_precision(2, 2);
  GlsObjective objective(d, omega);
  FusionCoupling c = build_coupling(d.spec, 0.4);
  SpgOptions options;
  CoefficientSet zero = CoefficientSet::zero(d.spec);
  SpgResult fit = spg_fit(objective, &c, 0.6, options, zero);
  double f0 = objective.value(zero) + smooth_fusion(zero, c, options.mu).first;
  CHECK(fit.objective <= f0 + 1e-12);
}

TEST_CASE("strong fusion drives cross-class ranges to zero") {
  Matrix b1(1, 1), b2(1, 1), b3(1, 1);
  b1 << 0.6;
  b2 << 0.2;
  b3 << 0.4;
  MultiClassPanel panel = testing::make_var1_panel({b1, b2, b3}, 30, 0.5, 63);
  panel = center_panel(panel).first;
  StackedDesign d = build_stacked(panel, 1);
  SpgResult fit = spg_fit(d, identity_precision(3, 1), 1e4, 0.1, {});
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& m : fit.beta.coef) {
    lo = std::min(lo, m(0, 0));
    hi = std::max(hi, m(0, 0));
  }
  CHECK(hi - lo < 1e-3);
}

TEST_CASE("proximal steps produce hard zeros") {
  Matrix b(3, 3);
  b << 0.5, 0.2, 0.0, 0.0, 0.4, 0.0, 0.0, 0.0, 0.3;
  MultiClassPanel panel = testing::make_var1_panel({b, b}, 40, 1.0, 71);
  panel = center_panel(panel).first;
  StackedDesign d = build_stacked(panel, 1);
  std::vector<double> grid = default_lambda_grid(d);
  SpgResult fit = spg_fit(d, identity_precision(2, 3), 0.0, grid[5], {});
  int zeros = 0;
  for (const auto& m : fit.beta.coef)
    for (int idx = 0; idx < m.size(); ++idx) {
      if (m(idx) == 0.0) ++zeros;
      CHECK((m(idx) == 0.0 || std::abs(m(idx)) > 0.0));
    }
  CHECK(zeros > 0);  // mid-grid weight must produce genuine sparsity
}

}  // TEST_SUITE
