#include "mcvar/reports.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace mcvar {

namespace {

using nlohmann::json;

constexpr int kFitFormatVersion = 1;

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, delim)) out.push_back(trim(field));
  if (!line.empty() && line.back() == delim) out.push_back("");
  return out;
}

std::string full_precision(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& text, int row, int col) {
  const char* begin = text.data();
  const char* end = begin + text.size();
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value))
    throw std::runtime_error("panel csv: non-numeric value '" + text + "' at row " +
                             std::to_string(row) + ", column " + std::to_string(col));
  return value;
}

long parse_time(const std::string& text, int row) {
  long value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw std::runtime_error("panel csv: non-integer time '" + text + "' at row " +
                             std::to_string(row));
  return value;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace

MultiClassPanel load_panel_csv(const std::string& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open panel csv '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("panel csv: empty file");
  std::vector<std::string> header = split(line, options.delimiter);
  if (header.size() < 3 || header[0] != "class" || header[1] != "time")
    throw std::runtime_error("panel csv: header must be 'class,time,<series...>'");
  const int j = static_cast<int>(header.size()) - 2;

  std::vector<std::string> class_order;
  std::map<std::string, std::map<long, std::vector<double>>> rows;
  int row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (trim(line).empty()) continue;
    std::vector<std::string> fields = split(line, options.delimiter);
    if (static_cast<int>(fields.size()) != j + 2)
      throw std::runtime_error("panel csv: row " + std::to_string(row_no) + " has " +
                               std::to_string(fields.size()) + " fields, expected " +
                               std::to_string(j + 2));
    const std::string& cls = fields[0];
    long t = parse_time(fields[1], row_no);
    std::vector<double> vals(j);
    for (int c = 0; c < j; ++c) vals[c] = parse_double(fields[c + 2], row_no, c + 3);
    auto& per_class = rows[cls];
    if (per_class.count(t))
      throw std::runtime_error("panel csv: duplicate (class,time) = (" + cls + "," +
                               std::to_string(t) + ")");
    if (std::find(class_order.begin(), class_order.end(), cls) == class_order.end())
      class_order.push_back(cls);
    per_class.emplace(t, std::move(vals));
  }
  if (class_order.empty()) throw std::runtime_error("panel csv: no data rows");

  const int t_len = static_cast<int>(rows[class_order[0]].size());
  MultiClassPanel panel;
  panel.spec = PanelSpec{static_cast<int>(class_order.size()), j, t_len, options.order};
  panel.class_names = class_order;
  panel.series_names.assign(header.begin() + 2, header.end());
  for (const std::string& cls : class_order) {
    const auto& per_class = rows[cls];
    if (static_cast<int>(per_class.size()) != t_len)
      throw std::runtime_error("panel csv: unbalanced panel, class '" + cls + "' has " +
                               std::to_string(per_class.size()) + " rows but class '" +
                               class_order[0] + "' has " + std::to_string(t_len));
    long t0 = per_class.begin()->first;
    long expected = t0;
    Matrix data(t_len, j);
    int r = 0;
    for (const auto& [t, vals] : per_class) {
      if (t != expected)
        throw std::runtime_error("panel csv: class '" + cls + "' missing time " +
                                 std::to_string(expected));
      for (int c = 0; c < j; ++c) data(r, c) = vals[c];
      ++expected;
      ++r;
    }
    panel.data.push_back(std::move(data));
  }
  panel.validate();
  return panel;
}

void write_panel_csv(const MultiClassPanel& panel, const std::string& path) {
  panel.validate();
  std::ostringstream out;
  out << "class,time";
  for (int s = 0; s < panel.spec.num_series; ++s) {
    std::string name = s < static_cast<int>(panel.series_names.size())
                           ? panel.series_names[s]
                           : "series" + std::to_string(s + 1);
    out << ',' << name;
  }
  out << '\n';
  for (int k = 0; k < panel.spec.num_classes; ++k) {
    std::string cls = k < static_cast<int>(panel.class_names.size())
                          ? panel.class_names[k]
                          : "class" + std::to_string(k + 1);
    for (int t = 0; t < panel.spec.num_times; ++t) {
      out << cls << ',' << (t + 1);
      for (int s = 0; s < panel.spec.num_series; ++s)
        out << ',' << full_precision(panel.data[k](t, s));
      out << '\n';
    }
  }
  write_file(path, out.str());
}

void export_fit(const FitResult& fit, const std::string& path) {
  json doc;
  doc["format"] = "mcvar-fit";
  doc["version"] = kFitFormatVersion;
  doc["spec"] = {{"classes", fit.spec.num_classes},
                 {"series", fit.spec.num_series},
                 {"times", fit.spec.num_times},
                 {"order", fit.spec.order}};
  doc["class_names"] = fit.class_names;
  doc["series_names"] = fit.series_names;
  doc["lambda1"] = fit.lambda1;
  doc["lambda2"] = fit.lambda2;
  doc["gamma1"] = fit.gamma1;
  doc["gamma2"] = fit.gamma2;
  doc["objective_trace"] = fit.objective_trace;
  doc["outer_iterations"] = fit.outer_iterations;
  doc["converged"] = fit.converged;
  doc["omega_identity_fallback"] = fit.omega_identity_fallback;

  json beta = json::array();
  for (int k = 0; k < fit.spec.num_classes; ++k) {
    json lags = json::array();
    for (int p = 0; p < fit.spec.order; ++p) {
      Matrix b = fit.beta.lag_matrix(k, p);
      json m = json::array();
      for (int r = 0; r < b.rows(); ++r) {
        json row = json::array();
        for (int c = 0; c < b.cols(); ++c) row.push_back(b(r, c));
        m.push_back(std::move(row));
      }
      lags.push_back(std::move(m));
    }
    beta.push_back(std::move(lags));
  }
  doc["beta"] = std::move(beta);

  json omega = json::array();
  for (const Matrix& w : fit.omega) {
    json m = json::array();
    for (int r = 0; r < w.rows(); ++r) {
      json row = json::array();
      for (int c = 0; c < w.cols(); ++c) row.push_back(w(r, c));
      m.push_back(std::move(row));
    }
    omega.push_back(std::move(m));
  }
  doc["omega"] = std::move(omega);

  write_file(path, doc.dump(2) + "\n");
}

FitResult load_fit(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open fit file '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw std::runtime_error("fit file '" + path + "': parse error: " + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != "mcvar-fit")
      throw std::runtime_error("not a fit file");
    if (doc.at("version").get<int>() != kFitFormatVersion)
      throw std::runtime_error("unsupported fit file version " +
                               doc.at("version").dump());
    FitResult fit;
    const json& spec = doc.at("spec");
    fit.spec = PanelSpec{spec.at("classes").get<int>(), spec.at("series").get<int>(),
                         spec.at("times").get<int>(), spec.at("order").get<int>()};
    fit.spec.validate();
    fit.class_names = doc.at("class_names").get<std::vector<std::string>>();
    fit.series_names = doc.at("series_names").get<std::vector<std::string>>();
    fit.lambda1 = doc.at("lambda1").get<double>();
    fit.lambda2 = doc.at("lambda2").get<double>();
    fit.gamma1 = doc.at("gamma1").get<double>();
    fit.gamma2 = doc.at("gamma2").get<double>();
    fit.objective_trace = doc.at("objective_trace").get<std::vector<double>>();
    fit.outer_iterations = doc.at("outer_iterations").get<int>();
    fit.converged = doc.at("converged").get<bool>();
    fit.omega_identity_fallback = doc.at("omega_identity_fallback").get<bool>();

    const json& beta = doc.at("beta");
    if (static_cast<int>(beta.size()) != fit.spec.num_classes)
      throw std::runtime_error("coefficient class count mismatch");
    fit.beta = CoefficientSet::zero(fit.spec);
    for (int k = 0; k < fit.spec.num_classes; ++k) {
      if (static_cast<int>(beta[k].size()) != fit.spec.order)
        throw std::runtime_error("coefficient lag count mismatch");
      for (int p = 0; p < fit.spec.order; ++p) {
        Matrix b(fit.spec.num_series, fit.spec.num_series);
        const json& m = beta[k][p];
        if (static_cast<int>(m.size()) != fit.spec.num_series)
          throw std::runtime_error("coefficient matrix shape mismatch");
        for (int r = 0; r < fit.spec.num_series; ++r) {
          if (static_cast<int>(m[r].size()) != fit.spec.num_series)
            throw std::runtime_error("coefficient matrix shape mismatch");
          for (int c = 0; c < fit.spec.num_series; ++c) b(r, c) = m[r][c].get<double>();
        }
        fit.beta.set_lag_matrix(k, p, b);
      }
    }

    const json& omega = doc.at("omega");
    if (static_cast<int>(omega.size()) != fit.spec.num_classes)
      throw std::runtime_error("precision class count mismatch");
    for (int k = 0; k < fit.spec.num_classes; ++k) {
      Matrix w(fit.spec.num_series, fit.spec.num_series);
      const json& m = omega[k];
      if (static_cast<int>(m.size()) != fit.spec.num_series)
        throw std::runtime_error("precision matrix shape mismatch");
      for (int r = 0; r < fit.spec.num_series; ++r) {
        if (static_cast<int>(m[r].size()) != fit.spec.num_series)
          throw std::runtime_error("precision matrix shape mismatch");
        for (int c = 0; c < fit.spec.num_series; ++c) w(r, c) = m[r][c].get<double>();
      }
      fit.omega.push_back(std::move(w));
    }
    return fit;
  } catch (const json::exception& e) {
    throw std::runtime_error("fit file '" + path + "': invalid structure: " + e.what());
  }
}

bool CoefficientSubset::contains(int p, int i, int j) const {
  if (lag && *lag != p + 1) return false;
  if (!targets.empty() && std::find(targets.begin(), targets.end(), i) == targets.end())
    return false;
  if (!sources.empty() && std::find(sources.begin(), sources.end(), j) == sources.end())
    return false;
  return true;
}

CoefficientSubset CoefficientSubset::parse(const std::string& text,
                                           const std::vector<std::string>& series_names) {
  CoefficientSubset subset;
  auto resolve_series = [&](const std::string& token) -> int {
    for (size_t s = 0; s < series_names.size(); ++s)
      if (series_names[s] == token) return static_cast<int>(s);
    int value = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size() || value < 1)
      throw std::runtime_error("subset: unknown series '" + token + "'");
    return value - 1;
  };
  for (const std::string& clause : split(text, ';')) {
    if (clause.empty()) continue;
    size_t eq = clause.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("subset: clause '" + clause + "' is not key=value");
    std::string key = trim(clause.substr(0, eq));
    std::string value = trim(clause.substr(eq + 1));
    if (key == "lag") {
      int lag = 0;
      auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), lag);
      if (ec != std::errc() || ptr != value.data() + value.size() || lag < 1)
        throw std::runtime_error("subset: bad lag '" + value + "'");
      subset.lag = lag;
    } else if (key == "targets" || key == "sources") {
      std::vector<int>& list = key == "targets" ? subset.targets : subset.sources;
      for (const std::string& token : split(value, ','))
        if (!token.empty()) list.push_back(resolve_series(token));
    } else {
      throw std::runtime_error("subset: unknown key '" + key + "'");
    }
  }
  return subset;
}

ClusterReport cluster_report(const CoefficientSet& beta, double tau) {
  if (tau < 0) throw std::invalid_argument("cluster_report: tau must be nonnegative");
  const PanelSpec& spec = beta.spec;
  ClusterReport report;
  report.reserve(spec.coeffs_per_class());
  std::vector<int> order(spec.num_classes);
  for (int p = 0; p < spec.order; ++p) {
    for (int i = 0; i < spec.num_series; ++i) {
      for (int j = 0; j < spec.num_series; ++j) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
          return beta.beta(a, p, i, j) < beta.beta(b, p, i, j);
        });
        PositionClusters pc;
        pc.lag = p;
        pc.target = i;
        pc.source = j;
        ClusterGroup group;
        double group_sum = 0.0;
        for (size_t idx = 0; idx < order.size(); ++idx) {
          double v = beta.beta(order[idx], p, i, j);
          if (!group.classes.empty() &&
              v - beta.beta(group.classes.back(), p, i, j) > tau) {
            group.value = group_sum / group.classes.size();
            std::sort(group.classes.begin(), group.classes.end());
            pc.groups.push_back(std::move(group));
            group = ClusterGroup{};
            group_sum = 0.0;
          }
          group.classes.push_back(order[idx]);
          group_sum += v;
        }
        if (!group.classes.empty()) {
          group.value = group_sum / group.classes.size();
          std::sort(group.classes.begin(), group.classes.end());
          pc.groups.push_back(std::move(group));
        }
        report.push_back(std::move(pc));
      }
    }
  }
  return report;
}

NetworkEdgeList network_export(const CoefficientSet& beta, int lag,
                               const CoefficientSubset& subset) {
  const PanelSpec& spec = beta.spec;
  if (lag < 1 || lag > spec.order)
    throw std::invalid_argument("network_export: lag out of range");
  NetworkEdgeList edges;
  edges.lag = lag;
  edges.per_class.resize(spec.num_classes);
  for (int k = 0; k < spec.num_classes; ++k)
    for (int i = 0; i < spec.num_series; ++i)
      for (int j = 0; j < spec.num_series; ++j) {
        if (!subset.contains(lag - 1, i, j)) continue;
        double w = beta.beta(k, lag - 1, i, j);
        if (w != 0.0) edges.per_class[k].push_back(NetworkEdge{j, i, w, w > 0 ? 1 : -1});
      }
  return edges;
}

std::string network_dot(const NetworkEdgeList& edges, const std::vector<std::string>& class_names,
                        const std::vector<std::string>& series_names) {
  double max_w = 0.0;
  for (const auto& cls : edges.per_class)
    for (const auto& e : cls) max_w = std::max(max_w, std::abs(e.weight));
  auto series = [&](int s) {
    return s < static_cast<int>(series_names.size()) ? series_names[s]
                                                     : "series" + std::to_string(s + 1);
  };
  std::ostringstream out;
  out << "digraph effects {\n";
  for (size_t k = 0; k < edges.per_class.size(); ++k) {
    std::string cls = k < class_names.size() ? class_names[k] : "class" + std::to_string(k + 1);
    out << "  subgraph cluster_" << k << " {\n";
    out << "    label=\"" << cls << "\";\n";
    for (size_t s = 0; s < series_names.size(); ++s)
      out << "    \"" << cls << "/" << series(static_cast<int>(s)) << "\" [label=\""
          << series(static_cast<int>(s)) << "\"];\n";
    for (const auto& e : edges.per_class[k]) {
      double penwidth = max_w > 0 ? 0.5 + 3.5 * std::abs(e.weight) / max_w : 1.0;
      out << "    \"" << cls << "/" << series(e.source) << "\" -> \"" << cls << "/"
          << series(e.target) << "\" [weight=" << full_precision(e.weight)
          << ", penwidth=" << full_precision(penwidth) << ", sign=\""
          << (e.sign > 0 ? "positive" : "negative") << "\", color="
          << (e.sign > 0 ? "blue" : "red") << "];\n";
    }
    out << "  }\n";
  }
  out << "}\n";
  return out.str();
}

SimilarityMatrix similarity_matrix(const CoefficientSet& beta, const CoefficientSubset& subset) {
  const PanelSpec& spec = beta.spec;
  const int kc = spec.num_classes;
  std::vector<std::vector<bool>> support(kc);
  int positions = 0;
  for (int p = 0; p < spec.order; ++p)
    for (int i = 0; i < spec.num_series; ++i)
      for (int j = 0; j < spec.num_series; ++j)
        if (subset.contains(p, i, j)) ++positions;
  if (positions == 0) throw std::invalid_argument("similarity_matrix: empty coefficient subset");

  for (int k = 0; k < kc; ++k) {
    support[k].reserve(positions);
    for (int p = 0; p < spec.order; ++p)
      for (int i = 0; i < spec.num_series; ++i)
        for (int j = 0; j < spec.num_series; ++j)
          if (subset.contains(p, i, j)) support[k].push_back(beta.beta(k, p, i, j) != 0.0);
  }

  SimilarityMatrix sim;
  sim.values = Matrix::Zero(kc, kc);
  sim.empty_support.assign(kc, false);
  for (int a = 0; a < kc; ++a) {
    int size_a = static_cast<int>(std::count(support[a].begin(), support[a].end(), true));
    if (size_a == 0) {
      sim.empty_support[a] = true;
      continue;  // row stays 0, flagged
    }
    for (int b = 0; b < kc; ++b) {
      int shared = 0;
      for (int q = 0; q < positions; ++q)
        if (support[a][q] && support[b][q]) ++shared;
      sim.values(a, b) = static_cast<double>(shared) / size_a;
    }
  }
  return sim;
}

void write_similarity_csv(const SimilarityMatrix& sim, const std::vector<std::string>& class_names,
                          const std::string& path) {
  const int kc = static_cast<int>(sim.values.rows());
  auto name = [&](int k) {
    return k < static_cast<int>(class_names.size()) ? class_names[k]
                                                    : "class" + std::to_string(k + 1);
  };
  std::ostringstream out;
  out << "class";
  for (int b = 0; b < kc; ++b) out << ',' << name(b);
  out << '\n';
  for (int a = 0; a < kc; ++a) {
    out << name(a);
    for (int b = 0; b < kc; ++b) out << ',' << full_precision(sim.values(a, b));
    out << '\n';
  }
  write_file(path, out.str());
}

void write_clusters_json(const ClusterReport& report, const std::vector<std::string>& class_names,
                         double tau, const std::string& path) {
  json doc;
  doc["format"] = "mcvar-clusters";
  doc["tau"] = tau;
  json positions = json::array();
  for (const PositionClusters& pc : report) {
    json groups = json::array();
    for (const ClusterGroup& g : pc.groups) {
      json members = json::array();
      for (int k : g.classes)
        members.push_back(k < static_cast<int>(class_names.size())
                              ? class_names[k]
                              : "class" + std::to_string(k + 1));
      groups.push_back({{"value", g.value}, {"classes", std::move(members)}});
    }
    positions.push_back({{"lag", pc.lag + 1},
                         {"target", pc.target + 1},
                         {"source", pc.source + 1},
                         {"groups", std::move(groups)}});
  }
  doc["positions"] = std::move(positions);
  write_file(path, doc.dump(2) + "\n");
}

void write_study_outputs(const StudyResult& study, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);

  std::ostringstream csv;
  csv << "design,run,seed,estimator,maee,status\n";
  for (int r = 0; r < study.runs; ++r) {
    bool failed = std::find(study.failed_runs.begin(), study.failed_runs.end(), r) !=
                  study.failed_runs.end();
    for (const EstimatorTrace& trace : study.traces) {
      csv << design_name(study.design.variant) << ',' << r << ',' << study.run_seeds[r] << ','
          << estimator_name(trace.which) << ',';
      if (failed)
        csv << ",failed";
      else
        csv << full_precision(trace.maee_per_run[r]) << ",ok";
      csv << '\n';
    }
  }
  write_file((std::filesystem::path(out_dir) / "runs.csv").string(), csv.str());

  json doc;
  doc["format"] = "mcvar-study";
  doc["design"] = design_name(study.design.variant);
  doc["spec"] = {{"classes", study.design.spec.num_classes},
                 {"series", study.design.spec.num_series},
                 {"times", study.design.spec.num_times},
                 {"order", study.design.spec.order}};
  doc["runs"] = study.runs;
  doc["master_seed"] = study.master_seed;
  json estimators = json::object();
  for (const EstimatorTrace& trace : study.traces) {
    json entry;
    entry["maee_mean"] = trace.maee_mean;
    json per_run = json::array();
    for (double v : trace.maee_per_run) {
      if (std::isnan(v))
        per_run.push_back(nullptr);
      else
        per_run.push_back(v);
    }
    entry["maee_per_run"] = std::move(per_run);
    estimators[estimator_name(trace.which)] = std::move(entry);
  }
  doc["estimators"] = std::move(estimators);
  json tests = json::object();
  for (const PairTest& test : study.tests) {
    std::string key = estimator_name(test.a) + "_vs_" + estimator_name(test.b);
    if (test.degenerate)
      tests[key] = nullptr;
    else
      tests[key] = test.p_value;
  }
  doc["paired_ttests"] = std::move(tests);
  json failed = json::array();
  for (size_t i = 0; i < study.failed_runs.size(); ++i)
    failed.push_back({{"run", study.failed_runs[i]}, {"reason", study.failure_reasons[i]}});
  doc["failed_runs"] = std::move(failed);
  write_file((std::filesystem::path(out_dir) / "summary.json").string(), doc.dump(2) + "\n");
}

}  // namespace mcvar
