#include "mcvar/spg.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>
#include <stdexcept>

namespace mcvar {

double power_lambda_max(const Matrix& sym, double tol, int max_iter) {
  const int n = static_cast<int>(sym.rows());
  if (n == 0) return 0.0;
  if (n == 1) return sym(0, 0);
  // fixed-seed start vector so results are reproducible
  std::mt19937 rng(0x5eed);
  std::normal_distribution<double> nd;
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = nd(rng);
  v.normalize();
  double lam = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Vector w = sym * v;
    double norm = w.norm();
    if (norm < 1e-300) return 0.0;
    v = w / norm;
    double lam_new = v.dot(sym * v);
    if (std::abs(lam_new - lam) <= tol * std::max(1.0, std::abs(lam_new))) return lam_new;
    lam = lam_new;
  }
  return lam;
}

namespace {

void check_omega(const PrecisionSet& omega, int num_series) {
  for (size_t k = 0; k < omega.size(); ++k) {
    const Matrix& w = omega[k];
    if (w.rows() != num_series || w.cols() != num_series)
      throw std::invalid_argument("omega: class " + std::to_string(k + 1) +
                                  " has wrong dimensions");
    double scale = std::max(1.0, w.cwiseAbs().maxCoeff());
    if ((w - w.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale)
      throw std::invalid_argument("omega: class " + std::to_string(k + 1) + " is not symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> es(w, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-8 * scale)
      throw std::invalid_argument("omega: class " + std::to_string(k + 1) +
                                  " is not positive definite");
  }
}

}  // namespace

GlsObjective::GlsObjective(const StackedDesign& design, const PrecisionSet& omega)
    : spec_(design.spec), omega_(omega) {
  if (static_cast<int>(omega.size()) != spec_.num_classes)
    throw std::invalid_argument("omega: class count does not match the design");
  check_omega(omega, spec_.num_series);
  const int kc = spec_.num_classes;
  gram_.reserve(kc);
  xty_.reserve(kc);
  yty_.reserve(kc);
  for (int k = 0; k < kc; ++k) {
    const Matrix& x0 = design.predictors[k];
    const Matrix& y = design.targets[k];
    gram_.push_back(x0.transpose() * x0);
    xty_.push_back(x0.transpose() * y);
    yty_.push_back(y.transpose() * y);
    double bound = power_lambda_max(gram_.back()) * power_lambda_max(omega_[k]);
    spectral_bound_ = std::max(spectral_bound_, bound);
  }
}

double GlsObjective::value(const CoefficientSet& beta) const {
  double total = 0.0;
  for (int k = 0; k < spec_.num_classes; ++k) {
    const Matrix& th = beta.coef[k];
    Matrix cross = th.transpose() * xty_[k];                      // J x J
    Matrix ete = yty_[k] - cross - cross.transpose();             // E'E
    ete.noalias() += th.transpose() * (gram_[k] * th);
    total += ete.cwiseProduct(omega_[k]).sum();
  }
  return total;
}

double GlsObjective::value_grad(const CoefficientSet& beta, CoefficientSet& grad) const {
  if (grad.coef.size() != beta.coef.size()) grad = CoefficientSet::zero(spec_);
  grad.spec = spec_;
  double total = 0.0;
  for (int k = 0; k < spec_.num_classes; ++k) {
    const Matrix& th = beta.coef[k];
    Matrix resid_cross = xty_[k] - gram_[k] * th;                 // X0'E, (J*P) x J
    grad.coef[k].noalias() = -2.0 * (resid_cross * omega_[k]);
    Matrix cross = th.transpose() * xty_[k];
    Matrix ete = yty_[k] - cross - cross.transpose();
    ete.noalias() += th.transpose() * (gram_[k] * th);
    total += ete.cwiseProduct(omega_[k]).sum();
  }
  return total;
}

std::pair<double, CoefficientSet> smooth_fusion(const CoefficientSet& beta,
                                                const FusionCoupling& coupling, double mu) {
  if (mu <= 0) throw std::invalid_argument("smooth_fusion: mu must be positive");
  CoefficientSet grad = CoefficientSet::zero(beta.spec);
  double value = 0.0;
  const double w = coupling.weight;
  for (const auto& [a, b] : coupling.pairs) {
    Eigen::ArrayXXd z = w * (beta.coef[a].array() - beta.coef[b].array());
    // Huber value: quadratic inside |z| <= mu, linear outside
    value += (z.abs() <= mu)
                 .select(z.square() / (2.0 * mu), z.abs() - mu / 2.0)
                 .sum();
    Eigen::ArrayXXd alpha = (z / mu).min(1.0).max(-1.0);
    grad.coef[a].array() += w * alpha;
    grad.coef[b].array() -= w * alpha;
  }
  return {value, std::move(grad)};
}

std::pair<double, CoefficientSet> gls_loss_grad(const CoefficientSet& beta,
                                                const StackedDesign& design,
                                                const PrecisionSet& omega) {
  GlsObjective objective(design, omega);
  CoefficientSet grad;
  double value = objective.value_grad(beta, grad);
  return {value, std::move(grad)};
}

double lipschitz_bound(const StackedDesign& design, const PrecisionSet& omega,
                       const FusionCoupling& coupling, double mu) {
  double spectral = 0.0;
  for (size_t k = 0; k < design.predictors.size(); ++k) {
    const Matrix& x0 = design.predictors[k];
    double bound = power_lambda_max(Matrix(x0.transpose() * x0)) * power_lambda_max(omega[k]);
    spectral = std::max(spectral, bound);
  }
  double l = 2.0 * spectral;
  if (!coupling.empty() && mu > 0)
    l += coupling.weight * coupling.weight * design.spec.num_classes / mu;
  return l;
}

namespace {

double l1_norm(const CoefficientSet& beta) {
  double s = 0.0;
  for (const Matrix& m : beta.coef) s += m.cwiseAbs().sum();
  return s;
}

}  // namespace

SpgResult spg_fit(const GlsObjective& objective, const FusionCoupling* coupling, double lambda2,
                  const SpgOptions& options, const CoefficientSet& init) {
  if (options.mu <= 0) throw std::invalid_argument("spg_fit: mu must be positive");
  if (options.tol <= 0) throw std::invalid_argument("spg_fit: tol must be positive");
  if (lambda2 < 0) throw std::invalid_argument("spg_fit: lambda2 must be nonnegative");
  const PanelSpec& spec = objective.spec();
  const bool fuse = coupling != nullptr && !coupling->empty() && coupling->weight > 0;

  double lip = 2.0 * objective.spectral_bound();
  if (fuse) lip += coupling->weight * coupling->weight * spec.num_classes / options.mu;

  auto eval = [&](const CoefficientSet& b) {
    double f = objective.value(b);
    if (fuse) f += smooth_fusion(b, *coupling, options.mu).first;
    return f + lambda2 * l1_norm(b);
  };

  SpgResult result;
  if (lip <= 1e-300) {
    // no curvature anywhere: predictors are all zero and fusion is off
    result.beta = lambda2 > 0 ? CoefficientSet::zero(spec) : init;
    result.objective = eval(result.beta);
    result.converged = true;
    return result;
  }

  CoefficientSet x = init;
  CoefficientSet x_prev = x;
  CoefficientSet y = x;
  CoefficientSet grad = CoefficientSet::zero(spec);
  double t = 1.0;
  const double thresh = lambda2 / lip;

  double best_obj = eval(x);
  CoefficientSet best = x;
  double obj_prev = best_obj;

  for (int iter = 1; iter <= options.max_iter; ++iter) {
    objective.value_grad(y, grad);
    if (fuse) {
      auto [hv, hg] = smooth_fusion(y, *coupling, options.mu);
      for (size_t k = 0; k < grad.coef.size(); ++k) grad.coef[k] += hg.coef[k];
    }
    x_prev = std::move(x);
    x = y;  // reuse shape
    for (size_t k = 0; k < x.coef.size(); ++k) {
      Eigen::ArrayXXd step = y.coef[k].array() - grad.coef[k].array() / lip;
      x.coef[k] = step.sign() * (step.abs() - thresh).max(0.0);
    }
    double t_next = (1.0 + std::sqrt(1.0 + 4.0 * t * t)) / 2.0;
    for (size_t k = 0; k < x.coef.size(); ++k)
      y.coef[k] = x.coef[k] + ((t - 1.0) / t_next) * (x.coef[k] - x_prev.coef[k]);
    t = t_next;

    double obj = eval(x);
    result.iterations = iter;
    if (obj < best_obj) {
      best_obj = obj;
      best = x;
    }
    if (std::abs(obj_prev - obj) <= options.tol * std::max(std::abs(obj_prev), 1e-12)) {
      result.converged = true;
      break;
    }
    obj_prev = obj;
  }

  result.beta = std::move(best);
  result.objective = best_obj;
  return result;
}

SpgResult spg_fit(const StackedDesign& design, const PrecisionSet& omega, double lambda1,
                  double lambda2, const SpgOptions& options, const CoefficientSet* init) {
  if (lambda1 < 0) throw std::invalid_argument("spg_fit: lambda1 must be nonnegative");
  GlsObjective objective(design, omega);
  FusionCoupling coupling;
  if (design.spec.num_classes >= 2 && lambda1 > 0)
    coupling = build_coupling(design.spec, lambda1);
  CoefficientSet start = init ? *init : CoefficientSet::zero(design.spec);
  return spg_fit(objective, coupling.empty() ? nullptr : &coupling, lambda2, options, start);
}

}  // namespace mcvar
