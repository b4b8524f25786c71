#include "mcvar/jgl.hpp"

#include "mcvar/penalties.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace mcvar {

std::vector<Matrix> residual_covariance(const std::vector<Matrix>& residuals) {
  std::vector<Matrix> s;
  s.reserve(residuals.size());
  for (const Matrix& e : residuals) {
    if (e.rows() < 1) throw std::invalid_argument("residual_covariance: no observations");
    Matrix cov = (e.transpose() * e) / static_cast<double>(e.rows());
    s.push_back((cov + cov.transpose()) / 2.0);
  }
  return s;
}

namespace {

// nondecreasing isotonic regression with unit weights (pool adjacent violators)
std::vector<double> isotonic_nondecreasing(const std::vector<double>& w) {
  const size_t n = w.size();
  std::vector<double> block_sum;
  std::vector<int> block_len;
  block_sum.reserve(n);
  block_len.reserve(n);
  for (double v : w) {
    block_sum.push_back(v);
    block_len.push_back(1);
    while (block_sum.size() > 1) {
      size_t m = block_sum.size();
      if (block_sum[m - 2] / block_len[m - 2] <= block_sum[m - 1] / block_len[m - 1]) break;
      block_sum[m - 2] += block_sum[m - 1];
      block_len[m - 2] += block_len[m - 1];
      block_sum.pop_back();
      block_len.pop_back();
    }
  }
  std::vector<double> out;
  out.reserve(n);
  for (size_t b = 0; b < block_sum.size(); ++b)
    out.insert(out.end(), block_len[b], block_sum[b] / block_len[b]);
  return out;
}

void check_symmetric(const Matrix& m, const char* name) {
  double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if (m.rows() != m.cols() || (m - m.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale)
    throw std::invalid_argument(std::string(name) + ": matrix is not symmetric");
}

}  // namespace

std::vector<double> clique_fusion_prox(const std::vector<double>& x, double t_fuse,
                                       double t_sparse) {
  if (t_fuse < 0 || t_sparse < 0)
    throw std::invalid_argument("clique_fusion_prox: thresholds must be nonnegative");
  const int k = static_cast<int>(x.size());
  std::vector<double> z(k);
  if (k == 0) return z;
  std::vector<int> idx(k);
  std::iota(idx.begin(), idx.end(), 0);
  // stable sort: ties keep original index order
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return x[a] < x[b]; });
  std::vector<double> shifted(k);
  for (int i = 0; i < k; ++i)
    shifted[i] = x[idx[i]] + t_fuse * (k + 1 - 2 * (i + 1));
  std::vector<double> iso = isotonic_nondecreasing(shifted);
  for (int i = 0; i < k; ++i) z[idx[i]] = soft_threshold(iso[i], t_sparse);
  return z;
}

Matrix admm_omega_update(const Matrix& s, const Matrix& a, double rho, double n_obs,
                         double logdet_weight) {
  if (rho <= 0) throw std::invalid_argument("admm_omega_update: rho must be positive");
  check_symmetric(s, "admm_omega_update: S");
  check_symmetric(a, "admm_omega_update: A");
  Matrix b = rho * a - n_obs * s;
  b = (b + b.transpose()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(b);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("admm_omega_update: eigendecomposition failed");
  const double c = 4.0 * rho * n_obs * logdet_weight;
  Vector vals = es.eigenvalues();
  for (int i = 0; i < vals.size(); ++i)
    vals[i] = (vals[i] + std::sqrt(vals[i] * vals[i] + c)) / (2.0 * rho);
  return es.eigenvectors() * vals.asDiagonal() * es.eigenvectors().transpose();
}

JglResult jgl_fit_warm(const std::vector<Matrix>& s, double gamma1, double gamma2, int n_obs,
                       const AdmmOptions& options, AdmmState& state) {
  if (gamma1 < 0 || gamma2 < 0)
    throw std::invalid_argument("jgl_fit: penalty weights must be nonnegative");
  if (n_obs < 1) throw std::invalid_argument("jgl_fit: need at least one observation");
  const int kc = static_cast<int>(s.size());
  if (kc < 1) throw std::invalid_argument("jgl_fit: need at least one class");
  const int j = static_cast<int>(s[0].rows());
  for (const Matrix& m : s) check_symmetric(m, "jgl_fit: S");

  const double rho = options.rho;
  const double jw = logdet_multiplier(options.logdet, j);
  const double t_fuse = gamma1 / rho;
  const double t_sparse = gamma2 / rho;

  if (static_cast<int>(state.consensus.size()) != kc)
    state.consensus.assign(kc, Matrix::Identity(j, j));
  if (static_cast<int>(state.dual.size()) != kc) state.dual.assign(kc, Matrix::Zero(j, j));

  PrecisionSet omega(kc, Matrix::Zero(j, j));
  std::vector<double> stack(kc), fused(kc);

  JglResult result;
  for (int iter = 1; iter <= options.max_iter; ++iter) {
    for (int k = 0; k < kc; ++k)
      omega[k] = admm_omega_update(s[k], state.consensus[k] - state.dual[k], rho, n_obs, jw);

    double dual_sq = 0.0;
    for (int c = 0; c < j; ++c) {
      for (int r = 0; r <= c; ++r) {
        for (int k = 0; k < kc; ++k) stack[k] = omega[k](r, c) + state.dual[k](r, c);
        fused = clique_fusion_prox(stack, t_fuse, t_sparse);
        for (int k = 0; k < kc; ++k) {
          double dz = fused[k] - state.consensus[k](r, c);
          dual_sq += (r == c ? 1.0 : 2.0) * dz * dz;
          state.consensus[k](r, c) = fused[k];
          state.consensus[k](c, r) = fused[k];
        }
      }
    }

    double primal_sq = 0.0;
    for (int k = 0; k < kc; ++k) {
      Matrix diff = omega[k] - state.consensus[k];
      primal_sq += diff.squaredNorm();
      state.dual[k] += diff;
    }

    result.iterations = iter;
    result.primal_residual = std::sqrt(primal_sq);
    result.dual_residual = rho * std::sqrt(dual_sq);
    if (result.primal_residual < options.primal_tol && result.dual_residual < options.dual_tol) {
      result.converged = true;
      break;
    }
  }

  result.omega = state.consensus;
  double min_eig = std::numeric_limits<double>::infinity();
  for (const Matrix& w : result.omega) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(w, Eigen::EigenvaluesOnly);
    min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
  }
  result.min_eigenvalue = min_eig;
  return result;
}

JglResult jgl_fit(const std::vector<Matrix>& s, double gamma1, double gamma2, int n_obs,
                  const AdmmOptions& options, const PrecisionSet* init) {
  AdmmState state;
  if (init) {
    state.consensus = *init;
    state.dual.assign(init->size(), Matrix::Zero(init->at(0).rows(), init->at(0).cols()));
  }
  return jgl_fit_warm(s, gamma1, gamma2, n_obs, options, state);
}

}  // namespace mcvar
