#pragma once

#include <Eigen/Dense>

#include <string>
#include <utility>
#include <vector>

namespace mcvar {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Dimensions of a multi-class panel: K classes, J series, T time points,
// VAR order P. Effective sample size per class is N = T - P.
struct PanelSpec {
  int num_classes = 1;  // K
  int num_series = 1;   // J
  int num_times = 3;    // T
  int order = 1;        // P

  int obs_count() const { return num_times - order; }                      // N
  int coef_rows() const { return num_series * order; }                     // J*P
  int coeffs_per_class() const { return order * num_series * num_series; } // P*J^2
  long total_coeffs() const { return static_cast<long>(num_classes) * coeffs_per_class(); }

  void validate() const;  // throws std::invalid_argument
  bool operator==(const PanelSpec&) const = default;
};

// Raw observations: one T x J matrix per class, rows indexed by time.
struct MultiClassPanel {
  PanelSpec spec;
  std::vector<Matrix> data;               // K matrices, each T x J
  std::vector<std::string> series_names;  // J labels
  std::vector<std::string> class_names;   // K labels

  void validate() const;  // shapes, finiteness, balance
};

// Regression form of the VAR: per class, a target matrix Y (N x J, column i
// collects the equation-i responses) and a lagged predictor block X0
// (N x J*P). X0 columns are lag-major: column p*J + j holds series j at
// lag p+1. The stacked response vec(Y) puts series 1 before series 2, etc.
struct StackedDesign {
  PanelSpec spec;
  std::vector<Matrix> targets;     // K of N x J
  std::vector<Matrix> predictors;  // K of N x (J*P)

  Vector stacked_response(int k) const;  // vec(targets[k]), length N*J
};

// Autoregressive coefficients for all classes. Stored per class as a
// (J*P) x J matrix whose column i holds the equation-i coefficients in
// predictor-column order, so fitted values are X0 * coef[k]. The flat
// coefficient position q in [0, P*J^2) used by the fusion coupling is the
// column-major linear index into coef[k].
struct CoefficientSet {
  PanelSpec spec;
  std::vector<Matrix> coef;  // K of (J*P) x J

  static CoefficientSet zero(const PanelSpec& spec);

  // Entry accessor: effect of series j at lag p+1 on series i, class k (all 0-based).
  double& beta(int k, int p, int i, int j) { return coef[k](p * spec.num_series + j, i); }
  double beta(int k, int p, int i, int j) const { return coef[k](p * spec.num_series + j, i); }

  Matrix lag_matrix(int k, int p) const;                  // J x J matrix B_{p+1}
  void set_lag_matrix(int k, int p, const Matrix& b);
  long nonzero_count() const;
};

// Inverse error covariance matrices, one J x J matrix per class.
using PrecisionSet = std::vector<Matrix>;

PrecisionSet identity_precision(int num_classes, int num_series);

// Removes the per-class per-series mean from every column. Returns the
// centered panel and the K x J matrix of removed means.
std::pair<MultiClassPanel, Matrix> center_panel(const MultiClassPanel& panel);

// Divides every column by its sample standard deviation (after centering).
// Returns the scaled panel and the K x J matrix of divisors; constant
// columns keep divisor 1.
std::pair<MultiClassPanel, Matrix> scale_panel(const MultiClassPanel& panel);

// Builds the stacked regression form for the given VAR order.
StackedDesign build_stacked(const MultiClassPanel& panel, int order);
StackedDesign build_stacked(const MultiClassPanel& panel);  // order from panel.spec

// Per-class N x J residual matrices E = Y - X0 * coef.
std::vector<Matrix> residuals(const StackedDesign& design, const CoefficientSet& beta);

// Companion matrix of class k (JP x JP) and its spectral radius. The VAR is
// stable iff the radius is < 1.
Matrix companion_matrix(const CoefficientSet& beta, int k);
double var_stability(const CoefficientSet& beta, int k);

}  // namespace mcvar
