#pragma once

#include "mcvar/panel.hpp"

#include <utility>
#include <vector>

namespace mcvar {

// Sparse form of the cross-class coupling matrix. Every unordered class
// pair contributes one row per coefficient position; the row carries +weight
// on the first class's coefficient and -weight on the second's. The dense
// matrix (K(K-1)/2 * P*J^2 rows) is never materialized.
struct FusionCoupling {
  double weight = 0.0;                      // lambda1, embedded in the rows
  int positions = 0;                        // coefficient slots per class (P*J^2)
  std::vector<std::pair<int, int>> pairs;   // class pairs (a, b) with a < b

  long row_count() const { return static_cast<long>(pairs.size()) * positions; }
  bool empty() const { return pairs.empty() || positions == 0; }

  struct Row {
    int class_a, class_b, position;
    double weight;
  };
  Row row(long m) const;  // m in [0, row_count())
};

// sign(v) * max(|v| - t, 0)
double soft_threshold(double v, double t);

// Sum over unordered class pairs of the entrywise absolute differences.
// All matrices must share dimensions; this evaluates P1 for coefficient and
// precision sets alike.
double eval_pairwise_fusion(const std::vector<Matrix>& values);
double eval_pairwise_fusion(const CoefficientSet& beta);

// Sum of absolute values over all classes and entries (P2).
double eval_l1(const std::vector<Matrix>& values);
double eval_l1(const CoefficientSet& beta);

// Builds the coupling for K >= 2 classes; throws for K < 2 (callers must use
// the lambda1 = 0 path instead).
FusionCoupling build_coupling(const PanelSpec& spec, double lambda1);

// Sum over coupling rows of |row . beta| = lambda1 * eval_pairwise_fusion(beta).
double coupling_abs_value(const FusionCoupling& coupling, const CoefficientSet& beta);

}  // namespace mcvar
