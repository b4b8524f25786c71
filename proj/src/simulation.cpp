#include "mcvar/simulation.hpp"

#include <Eigen/Cholesky>
#include <boost/math/distributions/students_t.hpp>

#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <thread>

namespace mcvar {

std::string design_name(DesignVariant v) {
  switch (v) {
    case DesignVariant::kVaryingBeta: return "varying-beta";
    case DesignVariant::kVaryingSigma: return "varying-sigma";
    case DesignVariant::kVaryingBoth: return "varying-both";
  }
  return "unknown";
}

std::optional<DesignVariant> parse_design(const std::string& name) {
  if (name == "varying-beta") return DesignVariant::kVaryingBeta;
  if (name == "varying-sigma") return DesignVariant::kVaryingSigma;
  if (name == "varying-both") return DesignVariant::kVaryingBoth;
  return std::nullopt;
}

std::string estimator_name(Estimator e) {
  switch (e) {
    case Estimator::kLeastSquares: return "ls";
    case Estimator::kSingleClass: return "single-class";
    case Estimator::kMultiClass: return "multi-class";
  }
  return "unknown";
}

namespace {

// classes split into three equal groups with increasing group level
int class_group(int k, int num_classes) { return (3 * k) / num_classes; }

// upper-triangular layout: 0.5 on the diagonal, eta on selected first rows
Matrix varying_beta_matrix(int j, double eta) {
  Matrix b = Matrix::Identity(j, j) * 0.5;
  const int top = (j + 1) / 2;  // leading block size
  for (int c = 1; c < j; ++c) b(0, c) = eta;         // all later series lead series 1
  for (int c = top + 1; c < j; ++c) b(top, c) = eta; // trailing series lead series top+1
  return b;
}

Matrix varying_sigma_beta_matrix(int j) {
  Matrix b = Matrix::Identity(j, j) * 0.5;
  for (int c = 1; c < j; ++c) b(0, c) = 0.25;
  return b;
}

}  // namespace

Matrix design_coefficients(const SimulationDesign& design, int k) {
  const int j = design.spec.num_series;
  switch (design.variant) {
    case DesignVariant::kVaryingSigma:
      return varying_sigma_beta_matrix(j);
    case DesignVariant::kVaryingBeta:
    case DesignVariant::kVaryingBoth: {
      double eta = 0.20 + 0.05 * class_group(k, design.spec.num_classes);
      return varying_beta_matrix(j, eta);
    }
  }
  throw std::logic_error("unknown design variant");
}

Matrix design_sigma(const SimulationDesign& design, int k) {
  const int j = design.spec.num_series;
  switch (design.variant) {
    case DesignVariant::kVaryingBeta:
      return Matrix::Identity(j, j) * 0.5;
    case DesignVariant::kVaryingSigma:
    case DesignVariant::kVaryingBoth: {
      double rho = 0.05 + 0.05 * class_group(k, design.spec.num_classes);
      Matrix s(j, j);
      for (int r = 0; r < j; ++r)
        for (int c = 0; c < j; ++c) s(r, c) = 0.5 * std::pow(rho, std::abs(r - c));
      return s;
    }
  }
  throw std::logic_error("unknown design variant");
}

GeneratedPanel gen_design(const SimulationDesign& design, std::uint64_t seed) {
  const PanelSpec& spec = design.spec;
  spec.validate();
  if (spec.order != 1)
    throw std::invalid_argument("gen_design: simulation designs are VAR(1) processes");
  const int j = spec.num_series;
  const int t_len = spec.num_times;
  const int burn_in = 100;

  GeneratedPanel out;
  out.panel.spec = spec;
  out.beta_true = CoefficientSet::zero(spec);
  out.panel.data.reserve(spec.num_classes);
  out.sigma_true.reserve(spec.num_classes);
  for (int k = 0; k < spec.num_classes; ++k) {
    out.panel.class_names.push_back("class" + std::to_string(k + 1));
    if (k == 0)
      for (int s = 0; s < j; ++s) out.panel.series_names.push_back("series" + std::to_string(s + 1));
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int k = 0; k < spec.num_classes; ++k) {
    Matrix b = design_coefficients(design, k);
    out.beta_true.set_lag_matrix(k, 0, b);
    Matrix sigma = design_sigma(design, k);
    out.sigma_true.push_back(sigma);
    Matrix chol = sigma.llt().matrixL();

    Matrix data(t_len, j);
    Vector y = Vector::Zero(j);
    Vector z(j);
    for (int t = 0; t < burn_in + t_len; ++t) {
      for (int s = 0; s < j; ++s) z[s] = gauss(rng);
      y = b * y + chol * z;
      if (t >= burn_in) data.row(t - burn_in) = y.transpose();
    }
    out.panel.data.push_back(std::move(data));
  }
  return out;
}

double maee(const CoefficientSet& estimate, const CoefficientSet& truth) {
  return maee(std::vector<CoefficientSet>{estimate}, std::vector<CoefficientSet>{truth});
}

double maee(const std::vector<CoefficientSet>& estimates,
            const std::vector<CoefficientSet>& truths) {
  if (estimates.empty() || estimates.size() != truths.size())
    throw std::invalid_argument("maee: estimate and truth lists must match and be non-empty");
  double total = 0.0;
  for (size_t r = 0; r < estimates.size(); ++r) {
    const CoefficientSet& est = estimates[r];
    const CoefficientSet& tru = truths[r];
    if (est.spec != tru.spec)
      throw std::invalid_argument("maee: estimate and truth dimensions do not match");
    double run_sum = 0.0;
    for (int k = 0; k < est.spec.num_classes; ++k)
      run_sum += (est.coef[k] - tru.coef[k]).cwiseAbs().sum();
    total += run_sum / est.spec.total_coeffs();
  }
  return total / static_cast<double>(estimates.size());
}

double paired_ttest(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("paired_ttest: unequal lengths");
  const int n = static_cast<int>(a.size());
  if (n < 2) throw std::invalid_argument("paired_ttest: need at least two pairs");
  double mean = 0.0;
  for (int i = 0; i < n; ++i) mean += a[i] - b[i];
  mean /= n;
  double ss = 0.0;
  for (int i = 0; i < n; ++i) {
    double d = a[i] - b[i] - mean;
    ss += d * d;
  }
  double sd = std::sqrt(ss / (n - 1));
  if (sd == 0.0)
    throw std::runtime_error("paired_ttest: degenerate sample (zero-variance differences)");
  double t = mean / (sd / std::sqrt(static_cast<double>(n)));
  boost::math::students_t dist(n - 1);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

std::uint64_t derive_run_seed(std::uint64_t master_seed, int run) {
  // splitmix64 over a counter offset
  std::uint64_t x = master_seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(run) + 1);
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

const EstimatorTrace* StudyResult::trace(Estimator e) const {
  for (const auto& t : traces)
    if (t.which == e) return &t;
  return nullptr;
}

const PairTest* StudyResult::pair(Estimator a, Estimator b) const {
  for (const auto& t : tests)
    if ((t.a == a && t.b == b) || (t.a == b && t.b == a)) return &t;
  return nullptr;
}

StudyResult run_study(const SimulationDesign& design, const StudyOptions& options) {
  if (options.runs < 1) throw std::invalid_argument("run_study: need at least one run");
  if (options.estimators.empty())
    throw std::invalid_argument("run_study: need at least one estimator");
  const int runs = options.runs;
  const int n_est = static_cast<int>(options.estimators.size());
  const double nan = std::numeric_limits<double>::quiet_NaN();

  StudyResult result;
  result.design = design;
  result.runs = runs;
  result.master_seed = options.master_seed;
  result.run_seeds.resize(runs);
  for (int r = 0; r < runs; ++r) result.run_seeds[r] = derive_run_seed(options.master_seed, r);
  result.traces.resize(n_est);
  for (int e = 0; e < n_est; ++e) {
    result.traces[e].which = options.estimators[e];
    result.traces[e].maee_per_run.assign(runs, nan);
  }
  std::vector<std::string> run_errors(runs);

  auto fit_one = [&](Estimator which, const MultiClassPanel& panel) -> FitResult {
    switch (which) {
      case Estimator::kLeastSquares: return fit_ls(panel, design.spec.order);
      case Estimator::kSingleClass: return fit_singleclass(panel, options.grid, options.fit);
      case Estimator::kMultiClass: return fit_multiclass(panel, options.grid, options.fit);
    }
    throw std::logic_error("unknown estimator");
  };

  auto run_once = [&](int r) {
    try {
      GeneratedPanel gp = gen_design(design, result.run_seeds[r]);
      MultiClassPanel centered = center_panel(gp.panel).first;
      for (int e = 0; e < n_est; ++e) {
        FitResult fit = fit_one(options.estimators[e], centered);
        result.traces[e].maee_per_run[r] = maee(fit.beta, gp.beta_true);
      }
    } catch (const std::exception& ex) {
      run_errors[r] = ex.what();
    }
  };

  int threads = options.threads > 0 ? options.threads
                                    : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min(threads, runs));
  if (threads == 1) {
    for (int r = 0; r < runs; ++r) run_once(r);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int w = 0; w < threads; ++w)
      pool.emplace_back([&] {
        for (int r = next.fetch_add(1); r < runs; r = next.fetch_add(1)) run_once(r);
      });
    for (auto& th : pool) th.join();
  }

  for (int r = 0; r < runs; ++r)
    if (!run_errors[r].empty()) {
      result.failed_runs.push_back(r);
      result.failure_reasons.push_back(run_errors[r]);
    }

  // aggregates over completed runs only
  std::vector<int> ok_runs;
  for (int r = 0; r < runs; ++r)
    if (run_errors[r].empty()) ok_runs.push_back(r);
  for (auto& trace : result.traces) {
    double sum = 0.0;
    for (int r : ok_runs) sum += trace.maee_per_run[r];
    trace.maee_mean = ok_runs.empty() ? nan : sum / static_cast<double>(ok_runs.size());
  }

  for (int e1 = 0; e1 < n_est; ++e1)
    for (int e2 = e1 + 1; e2 < n_est; ++e2) {
      PairTest test;
      test.a = options.estimators[e1];
      test.b = options.estimators[e2];
      std::vector<double> a, b;
      for (int r : ok_runs) {
        a.push_back(result.traces[e1].maee_per_run[r]);
        b.push_back(result.traces[e2].maee_per_run[r]);
      }
      try {
        test.p_value = paired_ttest(a, b);
      } catch (const std::exception&) {
        test.p_value = nan;
        test.degenerate = true;
      }
      result.tests.push_back(test);
    }
  return result;
}

}  // namespace mcvar
