#include "mcvar/cli.hpp"

#include "mcvar/fit.hpp"
#include "mcvar/reports.hpp"
#include "mcvar/simulation.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace mcvar {

namespace {

// flat key=value config: keys mirror the long flag names; values given on
// the command line win over the file
class ConfigFile {
 public:
  ConfigFile(const CLI::App* cmd, std::string path) : cmd_(cmd), path_(std::move(path)) {
    if (path_.empty()) return;
    std::ifstream in(path_);
    if (!in) throw std::runtime_error("cannot open config file '" + path_ + "'");
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      size_t hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      auto trim = [](std::string s) {
        size_t b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return std::string();
        size_t e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
      };
      std::string t = trim(line);
      if (t.empty()) continue;
      size_t eq = t.find('=');
      if (eq == std::string::npos)
        throw CLI::ValidationError("--config", path_ + ":" + std::to_string(line_no) +
                                                   " is not key=value");
      values_[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
    }
  }

  // remaining unconsumed keys are a usage error
  void finish() const {
    for (const auto& [key, value] : values_)
      if (!consumed_.count(key))
        throw CLI::ValidationError("--config", "unknown key '" + key + "' in " + path_);
  }

  template <typename T, typename Parse>
  void apply(const std::string& key, T& target, Parse parse) {
    auto it = values_.find(key);
    if (it == values_.end()) return;
    consumed_.insert(key);
    if (cmd_->count("--" + key) > 0) return;  // explicit flag wins
    try {
      target = parse(it->second);
    } catch (const CLI::Error&) {
      throw;
    } catch (const std::exception&) {
      throw CLI::ValidationError("--config", "bad value '" + it->second + "' for key '" + key +
                                                 "'");
    }
  }

  void apply_string(const std::string& key, std::string& target) {
    apply(key, target, [](const std::string& v) { return v; });
  }
  void apply_double(const std::string& key, double& target) {
    apply(key, target, [](const std::string& v) { return std::stod(v); });
  }
  void apply_int(const std::string& key, int& target) {
    apply(key, target, [](const std::string& v) { return std::stoi(v); });
  }
  void apply_uint64(const std::string& key, std::uint64_t& target) {
    apply(key, target, [](const std::string& v) { return std::stoull(v); });
  }
  void apply_bool(const std::string& key, bool& target) {
    apply(key, target, [key](const std::string& v) {
      if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
      if (v == "false" || v == "0" || v == "no" || v == "off") return false;
      throw CLI::ValidationError("--config", "bad boolean '" + v + "' for key '" + key + "'");
    });
  }

 private:
  const CLI::App* cmd_;
  std::string path_;
  std::map<std::string, std::string> values_;
  std::set<std::string> consumed_;
};

std::vector<double> parse_grid_list(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string token;
  while (std::getline(ss, token, ',')) {
    if (token.empty()) continue;
    try {
      out.push_back(std::stod(token));
    } catch (const std::exception&) {
      throw CLI::ValidationError(flag, "'" + token + "' is not a number");
    }
  }
  return out;
}

LogDetWeight parse_logdet(const std::string& text) {
  if (text == "dimension") return LogDetWeight::kDimension;
  if (text == "unit") return LogDetWeight::kUnit;
  throw CLI::ValidationError("--logdet", "must be 'dimension' or 'unit'");
}

struct FitArgs {
  std::string input, out, config, estimator = "multi", logdet = "dimension";
  std::string lambda1, lambda2, gamma1, gamma2;
  int order = 1;
  double mu = 1e-3, tol = 1e-6, outer_tol = 1e-2;
  int max_iter = 2000, max_outer = 20;
  bool no_center = false, scale_series = false;
};

int run_fit(FitArgs args, const CLI::App* cmd) {
  ConfigFile config(cmd, args.config);
  config.apply_string("input", args.input);
  config.apply_string("out", args.out);
  config.apply_string("estimator", args.estimator);
  config.apply_string("logdet", args.logdet);
  config.apply_string("lambda1", args.lambda1);
  config.apply_string("lambda2", args.lambda2);
  config.apply_string("gamma1", args.gamma1);
  config.apply_string("gamma2", args.gamma2);
  config.apply_int("order", args.order);
  config.apply_double("mu", args.mu);
  config.apply_double("tol", args.tol);
  config.apply_double("outer-tol", args.outer_tol);
  config.apply_int("max-iter", args.max_iter);
  config.apply_int("max-outer", args.max_outer);
  config.apply_bool("no-center", args.no_center);
  config.apply_bool("scale-series", args.scale_series);
  config.finish();

  CsvOptions csv;
  csv.order = args.order;
  MultiClassPanel panel = load_panel_csv(args.input, csv);

  if (!args.no_center) panel = center_panel(panel).first;
  if (args.scale_series) panel = scale_panel(panel).first;

  RegularizationGrid grid;
  grid.lambda1 = parse_grid_list(args.lambda1, "--lambda1");
  grid.lambda2 = parse_grid_list(args.lambda2, "--lambda2");
  grid.gamma1 = parse_grid_list(args.gamma1, "--gamma1");
  grid.gamma2 = parse_grid_list(args.gamma2, "--gamma2");

  FitOptions options;
  options.spg.mu = args.mu;
  options.spg.tol = args.tol;
  options.spg.max_iter = args.max_iter;
  options.outer_tol = args.outer_tol;
  options.max_outer = args.max_outer;
  options.admm.logdet = parse_logdet(args.logdet);

  FitResult fit;
  if (args.estimator == "multi") {
    fit = fit_multiclass(panel, grid, options);
  } else if (args.estimator == "single") {
    fit = fit_singleclass(panel, grid, options);
  } else if (args.estimator == "ls") {
    fit = fit_ls(panel, args.order);
  } else {
    throw CLI::ValidationError("--estimator", "must be 'multi', 'single' or 'ls'");
  }
  export_fit(fit, args.out);
  std::cout << "fit written to " << args.out << " (estimator " << args.estimator
            << ", lambda1=" << fit.lambda1 << ", lambda2=" << fit.lambda2
            << ", gamma1=" << fit.gamma1 << ", gamma2=" << fit.gamma2
            << ", outer iterations " << fit.outer_iterations
            << (fit.converged ? ", converged" : ", NOT converged") << ")\n";
  return 0;
}

struct SimulateArgs {
  std::string design = "varying-beta", out, scale, config, logdet = "dimension";
  int runs = 100, threads = 0;
  std::uint64_t seed = 1;
};

int run_simulate(SimulateArgs args, const CLI::App* cmd) {
  ConfigFile config(cmd, args.config);
  config.apply_string("design", args.design);
  config.apply_string("out", args.out);
  config.apply_string("scale", args.scale);
  config.apply_string("logdet", args.logdet);
  config.apply_int("runs", args.runs);
  config.apply_int("threads", args.threads);
  config.apply_uint64("seed", args.seed);
  config.finish();

  SimulationDesign design;
  auto variant = parse_design(args.design);
  if (!variant)
    throw CLI::ValidationError("--design",
                               "must be 'varying-beta', 'varying-sigma' or 'varying-both'");
  design.variant = *variant;
  if (!args.scale.empty()) {
    std::vector<double> dims = parse_grid_list(args.scale, "--scale");
    if (dims.size() != 3) throw CLI::ValidationError("--scale", "expected K,J,T");
    design.spec.num_classes = static_cast<int>(dims[0]);
    design.spec.num_series = static_cast<int>(dims[1]);
    design.spec.num_times = static_cast<int>(dims[2]);
  }

  StudyOptions options;
  options.runs = args.runs;
  options.master_seed = args.seed;
  options.threads = args.threads;
  options.fit.admm.logdet = parse_logdet(args.logdet);

  StudyResult study = run_study(design, options);
  write_study_outputs(study, args.out);
  std::cout << "study written to " << args.out << "\n";
  for (const EstimatorTrace& trace : study.traces)
    std::cout << "  " << estimator_name(trace.which) << " MAEE " << trace.maee_mean << "\n";
  for (const PairTest& test : study.tests)
    std::cout << "  p(" << estimator_name(test.a) << " vs " << estimator_name(test.b)
              << ") = " << (test.degenerate ? std::string("degenerate") : std::to_string(test.p_value))
              << "\n";
  if (!study.failed_runs.empty())
    std::cout << "  " << study.failed_runs.size() << " run(s) failed and were excluded\n";
  return 0;
}

struct ReportArgs {
  std::string kind, fit, out, subset, config;
  double tau = 1e-4;
  int lag = 1;
};

int run_report(ReportArgs args, const CLI::App* cmd) {
  ConfigFile config(cmd, args.config);
  config.apply_string("fit", args.fit);
  config.apply_string("out", args.out);
  config.apply_string("subset", args.subset);
  config.apply_double("tau", args.tau);
  config.apply_int("lag", args.lag);
  config.finish();

  FitResult fit = load_fit(args.fit);
  CoefficientSubset subset = CoefficientSubset::parse(args.subset, fit.series_names);
  if (args.kind == "clusters") {
    ClusterReport report = cluster_report(fit.beta, args.tau);
    if (!args.subset.empty()) {
      ClusterReport filtered;
      for (const PositionClusters& pc : report)
        if (subset.contains(pc.lag, pc.target, pc.source)) filtered.push_back(pc);
      report = std::move(filtered);
    }
    write_clusters_json(report, fit.class_names, args.tau, args.out);
  } else if (args.kind == "network") {
    NetworkEdgeList edges = network_export(fit.beta, args.lag, subset);
    std::ofstream out(args.out, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + args.out + "' for writing");
    out << network_dot(edges, fit.class_names, fit.series_names);
  } else if (args.kind == "similarity") {
    write_similarity_csv(similarity_matrix(fit.beta, subset), fit.class_names, args.out);
  } else {
    throw CLI::ValidationError("report", "kind must be 'clusters', 'network' or 'similarity'");
  }
  std::cout << args.kind << " report written to " << args.out << "\n";
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"Joint estimation of related sparse VAR models with cross-class fusion"};
  app.require_subcommand(1);

  FitArgs fit_args;
  CLI::App* fit_cmd = app.add_subcommand("fit", "Estimate a multi-class VAR from a panel CSV");
  fit_cmd->add_option("--input", fit_args.input, "Panel CSV (class,time,<series...>)")
      ->required();
  fit_cmd->add_option("--order", fit_args.order, "VAR order P");
  fit_cmd->add_option("--out", fit_args.out, "Output fit file (JSON)")->required();
  fit_cmd->add_option("--estimator", fit_args.estimator, "multi | single | ls");
  fit_cmd->add_option("--lambda1", fit_args.lambda1, "Fusion weight grid, comma-separated");
  fit_cmd->add_option("--lambda2", fit_args.lambda2, "Sparsity weight grid, comma-separated");
  fit_cmd->add_option("--gamma1", fit_args.gamma1, "Precision fusion grid, comma-separated");
  fit_cmd->add_option("--gamma2", fit_args.gamma2, "Precision sparsity grid, comma-separated");
  fit_cmd->add_option("--mu", fit_args.mu, "Fusion smoothing parameter");
  fit_cmd->add_option("--tol", fit_args.tol, "Inner solver tolerance");
  fit_cmd->add_option("--max-iter", fit_args.max_iter, "Inner solver iteration cap");
  fit_cmd->add_option("--outer-tol", fit_args.outer_tol, "Outer loop relative tolerance");
  fit_cmd->add_option("--max-outer", fit_args.max_outer, "Outer iteration cap");
  fit_cmd->add_option("--logdet", fit_args.logdet,
                      "log-determinant weight: 'dimension' (N*J) or 'unit' (N)");
  fit_cmd->add_flag("--no-center", fit_args.no_center, "Skip per-series mean centering");
  fit_cmd->add_flag("--scale-series", fit_args.scale_series,
                    "Scale each series to unit variance");
  fit_cmd->add_option("--config", fit_args.config, "Config file of key=value lines");

  SimulateArgs sim_args;
  CLI::App* sim_cmd = app.add_subcommand("simulate", "Run a benchmark study on synthetic data");
  sim_cmd->add_option("--design", sim_args.design,
                      "varying-beta | varying-sigma | varying-both");
  sim_cmd->add_option("--runs", sim_args.runs, "Replications");
  sim_cmd->add_option("--seed", sim_args.seed, "Master seed");
  sim_cmd->add_option("--scale", sim_args.scale, "Override dimensions as K,J,T");
  sim_cmd->add_option("--threads", sim_args.threads, "Worker threads (0 = hardware)");
  sim_cmd->add_option("--logdet", sim_args.logdet,
                      "log-determinant weight: 'dimension' (N*J) or 'unit' (N)");
  sim_cmd->add_option("--out", sim_args.out, "Output directory")->required();
  sim_cmd->add_option("--config", sim_args.config, "Config file of key=value lines");

  ReportArgs rep_args;
  CLI::App* rep_cmd = app.add_subcommand("report", "Export diagnostics from a saved fit");
  rep_cmd->add_option("kind", rep_args.kind, "clusters | network | similarity")->required();
  rep_cmd->add_option("--fit", rep_args.fit, "Fit file produced by 'fit'")->required();
  rep_cmd->add_option("--tau", rep_args.tau, "Merge tolerance for clusters");
  rep_cmd->add_option("--lag", rep_args.lag, "Lag for network edges (1-based)");
  rep_cmd->add_option("--subset", rep_args.subset,
                      "Coefficient filter, e.g. 'lag=1;targets=a,b;sources=c'");
  rep_cmd->add_option("--out", rep_args.out, "Output file")->required();
  rep_cmd->add_option("--config", rep_args.config, "Config file of key=value lines");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (fit_cmd->parsed()) return run_fit(fit_args, fit_cmd);
    if (sim_cmd->parsed()) return run_simulate(sim_args, sim_cmd);
    if (rep_cmd->parsed()) return run_report(rep_args, rep_cmd);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace mcvar
