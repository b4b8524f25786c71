#pragma once

#include "mcvar/fit.hpp"
#include "mcvar/panel.hpp"
#include "mcvar/simulation.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mcvar {

struct CsvOptions {
  char delimiter = ',';
  int order = 1;  // VAR order recorded on the loaded panel
};

// Reads a long-format panel: header `class,time,<series...>`, one row per
// (class, time). Rows may arrive unsorted; classes must be balanced and the
// per-class time index must be gap-free. Errors carry coordinates.
MultiClassPanel load_panel_csv(const std::string& path, const CsvOptions& options = {});
void write_panel_csv(const MultiClassPanel& panel, const std::string& path);

// Fit persistence: versioned JSON with full-precision numbers, so a
// round-trip reproduces every double bit-for-bit.
void export_fit(const FitResult& fit, const std::string& path);
FitResult load_fit(const std::string& path);

// Predicate over coefficient positions (lag p, target i, source j), parsed
// from clauses like "lag=1;targets=series1,series2;sources=3".
struct CoefficientSubset {
  std::optional<int> lag;    // 1-based
  std::vector<int> targets;  // 0-based series indices; empty = all
  std::vector<int> sources;

  bool contains(int p, int i, int j) const;  // p 0-based
  static CoefficientSubset parse(const std::string& text,
                                 const std::vector<std::string>& series_names);
};

struct ClusterGroup {
  double value = 0.0;          // group mean
  std::vector<int> classes;    // 0-based members
};

struct PositionClusters {
  int lag = 0, target = 0, source = 0;  // 0-based position
  std::vector<ClusterGroup> groups;
};

using ClusterReport = std::vector<PositionClusters>;

// Partitions classes per coefficient position: values whose pairwise gaps
// are within tau merge transitively into one group.
ClusterReport cluster_report(const CoefficientSet& beta, double tau);

struct NetworkEdge {
  int source = 0, target = 0;  // series indices, edge source -> target
  double weight = 0.0;
  int sign = 0;                // +1 / -1
};

struct NetworkEdgeList {
  int lag = 0;  // 1-based lag the edges were taken from
  std::vector<std::vector<NetworkEdge>> per_class;
};

// One directed edge per nonzero coefficient of the chosen lag.
NetworkEdgeList network_export(const CoefficientSet& beta, int lag,
                               const CoefficientSubset& subset = {});

// Graphviz rendering: one subgraph per class, edge width scaled by |weight|,
// sign attribute and blue/red color.
std::string network_dot(const NetworkEdgeList& edges, const std::vector<std::string>& class_names,
                        const std::vector<std::string>& series_names);

struct SimilarityMatrix {
  Matrix values;                  // K x K proportions in [0, 1]
  std::vector<bool> empty_support;  // rows with no nonzero effects (entries 0)
};

// Entry (i, j) = share of class i's nonzero effects (over the subset) that
// class j also has; asymmetric by construction.
SimilarityMatrix similarity_matrix(const CoefficientSet& beta,
                                   const CoefficientSubset& subset = {});

void write_similarity_csv(const SimilarityMatrix& sim, const std::vector<std::string>& class_names,
                          const std::string& path);
void write_clusters_json(const ClusterReport& report, const std::vector<std::string>& class_names,
                         double tau, const std::string& path);

// Study outputs: per-run CSV (`runs.csv`) and aggregate JSON (`summary.json`).
void write_study_outputs(const StudyResult& study, const std::string& out_dir);

}  // namespace mcvar
