#include "mcvar/panel.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

namespace mcvar {

void PanelSpec::validate() const {
  if (num_classes < 1) throw std::invalid_argument("panel spec: class count must be >= 1");
  if (num_series < 1) throw std::invalid_argument("panel spec: series count must be >= 1");
  if (order < 1) throw std::invalid_argument("panel spec: VAR order must be >= 1");
  if (num_times < order + 2)
    throw std::invalid_argument("panel spec: time length must be >= order + 2");
}

void MultiClassPanel::validate() const {
  spec.validate();
  if (static_cast<int>(data.size()) != spec.num_classes)
    throw std::invalid_argument("panel: class count does not match spec");
  for (int k = 0; k < spec.num_classes; ++k) {
    const Matrix& m = data[k];
    if (m.rows() != spec.num_times || m.cols() != spec.num_series)
      throw std::invalid_argument("panel: class " + std::to_string(k + 1) +
                                  " has inconsistent dimensions (unbalanced panel)");
    if (!m.allFinite())
      throw std::invalid_argument("panel: class " + std::to_string(k + 1) +
                                  " contains non-finite values");
  }
  if (!series_names.empty() && static_cast<int>(series_names.size()) != spec.num_series)
    throw std::invalid_argument("panel: series name count does not match spec");
  if (!class_names.empty() && static_cast<int>(class_names.size()) != spec.num_classes)
    throw std::invalid_argument("panel: class name count does not match spec");
}

Vector StackedDesign::stacked_response(int k) const {
  const Matrix& y = targets.at(k);
  return Eigen::Map<const Vector>(y.data(), y.size());
}

CoefficientSet CoefficientSet::zero(const PanelSpec& spec) {
  CoefficientSet b;
  b.spec = spec;
  b.coef.assign(spec.num_classes, Matrix::Zero(spec.coef_rows(), spec.num_series));
  return b;
}

Matrix CoefficientSet::lag_matrix(int k, int p) const {
  const int j = spec.num_series;
  return coef.at(k).middleRows(p * j, j).transpose();
}

void CoefficientSet::set_lag_matrix(int k, int p, const Matrix& b) {
  const int j = spec.num_series;
  coef.at(k).middleRows(p * j, j) = b.transpose();
}

long CoefficientSet::nonzero_count() const {
  long n = 0;
  for (const Matrix& m : coef) n += (m.array() != 0.0).count();
  return n;
}

PrecisionSet identity_precision(int num_classes, int num_series) {
  return PrecisionSet(num_classes, Matrix::Identity(num_series, num_series));
}

std::pair<MultiClassPanel, Matrix> center_panel(const MultiClassPanel& panel) {
  panel.validate();
  MultiClassPanel out = panel;
  Matrix means = Matrix::Zero(panel.spec.num_classes, panel.spec.num_series);
  for (int k = 0; k < panel.spec.num_classes; ++k) {
    for (int j = 0; j < panel.spec.num_series; ++j) {
      double m = out.data[k].col(j).mean();
      out.data[k].col(j).array() -= m;
      // second pass removes the residual rounding of the first
      double r = out.data[k].col(j).mean();
      out.data[k].col(j).array() -= r;
      means(k, j) = m + r;
    }
  }
  return {std::move(out), std::move(means)};
}

std::pair<MultiClassPanel, Matrix> scale_panel(const MultiClassPanel& panel) {
  panel.validate();
  MultiClassPanel out = panel;
  Matrix scales = Matrix::Ones(panel.spec.num_classes, panel.spec.num_series);
  const double n = panel.spec.num_times;
  for (int k = 0; k < panel.spec.num_classes; ++k) {
    for (int j = 0; j < panel.spec.num_series; ++j) {
      Vector col = out.data[k].col(j);
      double sd = std::sqrt((col.array() - col.mean()).square().sum() / std::max(n - 1.0, 1.0));
      if (sd > 0) {
        out.data[k].col(j) /= sd;
        scales(k, j) = sd;
      }
    }
  }
  return {std::move(out), std::move(scales)};
}

StackedDesign build_stacked(const MultiClassPanel& panel, int order) {
  panel.validate();
  if (panel.spec.num_times <= order)
    throw std::invalid_argument("build_stacked: time length must exceed the VAR order");
  PanelSpec spec = panel.spec;
  spec.order = order;
  spec.validate();

  const int n = spec.obs_count();
  const int j = spec.num_series;
  StackedDesign design;
  design.spec = spec;
  design.targets.reserve(spec.num_classes);
  design.predictors.reserve(spec.num_classes);
  for (int k = 0; k < spec.num_classes; ++k) {
    const Matrix& m = panel.data[k];
    design.targets.push_back(m.bottomRows(n));
    Matrix x0(n, j * order);
    for (int p = 0; p < order; ++p)
      x0.middleCols(p * j, j) = m.middleRows(order - p - 1, n);
    design.predictors.push_back(std::move(x0));
  }
  return design;
}

StackedDesign build_stacked(const MultiClassPanel& panel) {
  return build_stacked(panel, panel.spec.order);
}

std::vector<Matrix> residuals(const StackedDesign& design, const CoefficientSet& beta) {
  if (beta.spec != design.spec)
    throw std::invalid_argument("residuals: coefficient dimensions do not match the design");
  std::vector<Matrix> out;
  out.reserve(design.targets.size());
  for (size_t k = 0; k < design.targets.size(); ++k)
    out.push_back(design.targets[k] - design.predictors[k] * beta.coef[k]);
  return out;
}

Matrix companion_matrix(const CoefficientSet& beta, int k) {
  const int j = beta.spec.num_series;
  const int p = beta.spec.order;
  Matrix c = Matrix::Zero(j * p, j * p);
  for (int l = 0; l < p; ++l) c.block(0, l * j, j, j) = beta.lag_matrix(k, l);
  if (p > 1) c.block(j, 0, j * (p - 1), j * (p - 1)).setIdentity();
  return c;
}

double var_stability(const CoefficientSet& beta, int k) {
  Eigen::EigenSolver<Matrix> es(companion_matrix(beta, k), false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace mcvar
