#pragma once

#include "mcvar/panel.hpp"
#include "mcvar/simulation.hpp"

#include <random>

namespace mcvar::testing {

// Panel simulated from a stable VAR(1) with the given coefficient matrices
// and iid standard normal errors scaled by noise_sd.
inline MultiClassPanel make_var1_panel(const std::vector<Matrix>& b, int t_len, double noise_sd,
                                       unsigned seed) {
  const int kc = static_cast<int>(b.size());
  const int j = static_cast<int>(b[0].rows());
  MultiClassPanel panel;
  panel.spec = PanelSpec{kc, j, t_len, 1};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  for (int k = 0; k < kc; ++k) {
    Matrix data(t_len, j);
    Vector y(j);
    for (int s = 0; s < j; ++s) y[s] = gauss(rng);  // random start, no burn-in
    data.row(0) = y.transpose();
    for (int t = 1; t < t_len; ++t) {
      Vector e(j);
      for (int s = 0; s < j; ++s) e[s] = noise_sd * gauss(rng);
      y = b[k] * y + e;
      data.row(t) = y.transpose();
    }
    panel.data.push_back(std::move(data));
  }
  for (int k = 0; k < kc; ++k) panel.class_names.push_back("class" + std::to_string(k + 1));
  for (int s = 0; s < j; ++s) panel.series_names.push_back("series" + std::to_string(s + 1));
  return panel;
}

inline CoefficientSet coefficients_from_lag1(const PanelSpec& spec,
                                             const std::vector<Matrix>& b) {
  CoefficientSet beta = CoefficientSet::zero(spec);
  for (int k = 0; k < spec.num_classes; ++k) beta.set_lag_matrix(k, 0, b[k]);
  return beta;
}

inline Matrix random_spd(int n, unsigned seed, double ridge = 0.5) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  Matrix a(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) a(r, c) = gauss(rng);
  return a * a.transpose() / n + ridge * Matrix::Identity(n, n);
}

}  // namespace mcvar::testing
