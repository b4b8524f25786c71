#pragma once

#include "mcvar/fit.hpp"
#include "mcvar/panel.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mcvar {

enum class DesignVariant { kVaryingBeta, kVaryingSigma, kVaryingBoth };

std::string design_name(DesignVariant v);
std::optional<DesignVariant> parse_design(const std::string& name);

// Benchmark data-generating processes: block-structured VAR(1) coefficient
// matrices with spectral radius 0.5 and Gaussian errors. Coefficient
// magnitudes and/or error correlations vary across three equal groups of
// classes. Defaults match the reference dimensions (K=15, J=10, T=100).
struct SimulationDesign {
  DesignVariant variant = DesignVariant::kVaryingBeta;
  PanelSpec spec{15, 10, 100, 1};
};

// True parameters of one design (independent of the seed).
Matrix design_coefficients(const SimulationDesign& design, int k);  // J x J
Matrix design_sigma(const SimulationDesign& design, int k);         // J x J

struct GeneratedPanel {
  MultiClassPanel panel;
  CoefficientSet beta_true;
  std::vector<Matrix> sigma_true;
};

// Simulates the recursion with a 100-step burn-in before recording T
// observations; fully reproducible from the seed.
GeneratedPanel gen_design(const SimulationDesign& design, std::uint64_t seed);

// Mean absolute elementwise deviation with 1/(R P K J^2) normalization.
double maee(const std::vector<CoefficientSet>& estimates,
            const std::vector<CoefficientSet>& truths);
double maee(const CoefficientSet& estimate, const CoefficientSet& truth);

// Two-sided paired t-test on elementwise differences; returns the p-value.
// Throws if fewer than two pairs or the differences have zero variance.
double paired_ttest(const std::vector<double>& a, const std::vector<double>& b);

// Counter-based per-run seed derivation.
std::uint64_t derive_run_seed(std::uint64_t master_seed, int run);

enum class Estimator { kLeastSquares, kSingleClass, kMultiClass };
std::string estimator_name(Estimator e);

struct StudyOptions {
  int runs = 100;
  std::uint64_t master_seed = 1;
  std::vector<Estimator> estimators = {Estimator::kLeastSquares, Estimator::kSingleClass,
                                       Estimator::kMultiClass};
  int threads = 0;  // 0 = hardware concurrency
  FitOptions fit;
  RegularizationGrid grid;  // empty lists = data-driven defaults per run
};

struct EstimatorTrace {
  Estimator which;
  std::vector<double> maee_per_run;  // aligned with run index, NaN for failed runs
  double maee_mean = 0.0;            // over completed runs
};

struct PairTest {
  Estimator a, b;
  double p_value = 0.0;   // NaN when degenerate
  bool degenerate = false;
};

struct StudyResult {
  SimulationDesign design;
  int runs = 0;
  std::uint64_t master_seed = 0;
  std::vector<std::uint64_t> run_seeds;
  std::vector<EstimatorTrace> traces;
  std::vector<PairTest> tests;
  std::vector<int> failed_runs;               // excluded from every aggregate
  std::vector<std::string> failure_reasons;

  const EstimatorTrace* trace(Estimator e) const;
  const PairTest* pair(Estimator a, Estimator b) const;
};

// Runs R independent replications (parallel over runs), fits the requested
// estimators, and aggregates MAEE traces and paired tests. Results depend
// only on (design, options), never on the thread schedule.
StudyResult run_study(const SimulationDesign& design, const StudyOptions& options);

}  // namespace mcvar
