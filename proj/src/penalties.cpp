#include "mcvar/penalties.hpp"

#include <cmath>
#include <stdexcept>

namespace mcvar {

FusionCoupling::Row FusionCoupling::row(long m) const {
  const auto& pr = pairs.at(static_cast<size_t>(m / positions));
  return Row{pr.first, pr.second, static_cast<int>(m % positions), weight};
}

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

double eval_pairwise_fusion(const std::vector<Matrix>& values) {
  const int k = static_cast<int>(values.size());
  if (k < 1) throw std::invalid_argument("pairwise fusion: need at least one class");
  for (int a = 1; a < k; ++a)
    if (values[a].rows() != values[0].rows() || values[a].cols() != values[0].cols())
      throw std::invalid_argument("pairwise fusion: class value lists have unequal lengths");
  double total = 0.0;
  for (int a = 0; a < k; ++a)
    for (int b = a + 1; b < k; ++b)
      total += (values[a] - values[b]).cwiseAbs().sum();
  return total;
}

double eval_pairwise_fusion(const CoefficientSet& beta) { return eval_pairwise_fusion(beta.coef); }

double eval_l1(const std::vector<Matrix>& values) {
  double total = 0.0;
  for (const Matrix& m : values) total += m.cwiseAbs().sum();
  return total;
}

double eval_l1(const CoefficientSet& beta) { return eval_l1(beta.coef); }

FusionCoupling build_coupling(const PanelSpec& spec, double lambda1) {
  spec.validate();
  if (spec.num_classes < 2)
    throw std::invalid_argument("build_coupling: fusion needs at least two classes");
  if (lambda1 < 0) throw std::invalid_argument("build_coupling: lambda1 must be nonnegative");
  FusionCoupling c;
  c.weight = lambda1;
  c.positions = spec.coeffs_per_class();
  c.pairs.reserve(static_cast<size_t>(spec.num_classes) * (spec.num_classes - 1) / 2);
  for (int a = 0; a < spec.num_classes; ++a)
    for (int b = a + 1; b < spec.num_classes; ++b) c.pairs.emplace_back(a, b);
  return c;
}

double coupling_abs_value(const FusionCoupling& coupling, const CoefficientSet& beta) {
  double total = 0.0;
  for (const auto& [a, b] : coupling.pairs)
    total += (beta.coef[a] - beta.coef[b]).cwiseAbs().sum();
  return coupling.weight * total;
}

}  // namespace mcvar
