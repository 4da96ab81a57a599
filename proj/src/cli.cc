#include "rotavg/cli.h"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "rotavg/errors.h"
#include "rotavg/eval.h"
#include "rotavg/io.h"
#include "rotavg/robust_loss.h"
#include "rotavg/solver.h"
#include "rotavg/synth.h"
#include "rotavg/two_view.h"

namespace rotavg {
namespace {

std::vector<std::string> SplitList(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) {
    if (item.empty()) {
      throw InvalidArgumentError("empty element in list '" + text + "'");
    }
    out.push_back(item);
  }
  if (out.empty()) throw InvalidArgumentError("empty list");
  return out;
}

double ParseNumber(const std::string& text) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || !std::isfinite(value)) {
    throw InvalidArgumentError("not a number: '" + text + "'");
  }
  return value;
}

std::vector<double> ParseThresholds(const std::string& text) {
  std::vector<double> out;
  for (const std::string& item : SplitList(text, ',')) {
    const double value = ParseNumber(item);
    if (!(value > 0.0)) {
      throw InvalidArgumentError("thresholds must be positive");
    }
    out.push_back(value);
  }
  return out;
}

std::vector<NoiseComponent> ParseNoise(const std::string& text) {
  std::vector<NoiseComponent> out;
  for (const std::string& item : SplitList(text, ',')) {
    const std::vector<std::string> parts = SplitList(item, ':');
    if (parts.size() != 2) {
      throw InvalidArgumentError("noise component '" + item +
                                 "' must be fraction:sigma_deg");
    }
    out.push_back({ParseNumber(parts[0]), ParseNumber(parts[1])});
  }
  return out;
}

std::string Fixed(double value, int precision) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.*f", precision, value);
  return buffer;
}

std::string Pad(const std::string& text, std::size_t width) {
  return text.size() >= width ? text + " "
                              : text + std::string(width - text.size(), ' ');
}

std::string ThresholdLabel(double threshold) {
  std::ostringstream out;
  out << threshold;
  return out.str();
}

TreeWeight ParseTreeWeight(const std::string& name) {
  if (name == "auto") return TreeWeight::kAuto;
  if (name == "inlier_count") return TreeWeight::kInlierCount;
  if (name == "inverse_cov_trace") return TreeWeight::kInverseCovTrace;
  if (name == "unit") return TreeWeight::kUnit;
  throw InvalidArgumentError("unknown tree weight '" + name + "'");
}

std::vector<std::string> LossNames() {
  std::vector<std::string> out;
  for (LossType type : AllLossTypes()) out.emplace_back(LossName(type));
  return out;
}

std::vector<std::string> WeightingNames() {
  std::vector<std::string> out;
  for (Weighting w : AllWeightings()) out.emplace_back(WeightingName(w));
  return out;
}

// Solver flags shared by average, report and bench.
struct SolverFlags {
  std::string loss = "magsac";
  double loss_scale = 0.0;
  CLI::Option* loss_scale_option = nullptr;
  int magsac_nu = 3;
  double magsac_alpha = 0.99;
  std::string weighting = "cov_full";
  std::string tree_weight = "auto";
  int max_outer = 32;
  int max_inner = 10;
  bool strict = false;
  int threads = 1;

  void Register(CLI::App* app, bool with_loss) {
    if (with_loss) {
      app->add_option("--loss", loss, "Robust loss")
          ->check(CLI::IsMember(LossNames()))
          ->capture_default_str();
      app->add_option("--weighting", weighting, "Edge weighting mode")
          ->check(CLI::IsMember(WeightingNames()))
          ->capture_default_str();
    }
    loss_scale_option = app->add_option(
        "--loss-scale", loss_scale,
        "Loss scale (sigma_max for magsac); radians for none/inlier_count, "
        "whitened units for cov_* (default depends on loss and weighting)");
    loss_scale_option->check(CLI::PositiveNumber);
    app->add_option("--magsac-nu", magsac_nu, "Magsac degrees of freedom")
        ->check(CLI::Range(2, 16))
        ->capture_default_str();
    app->add_option("--magsac-alpha", magsac_alpha,
                    "Magsac chi quantile level, in (0.5, 1)")
        ->capture_default_str();
    app->add_option("--tree-weight", tree_weight,
                    "Spanning-tree edge weight for initialization")
        ->check(CLI::IsMember(
            {"auto", "inlier_count", "inverse_cov_trace", "unit"}))
        ->capture_default_str();
    app->add_option("--max-outer", max_outer, "Maximum IRLS iterations")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app->add_option("--max-inner", max_inner,
                    "Maximum Gauss-Newton iterations per IRLS iteration")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app->add_flag("--strict", strict,
                  "Fail instead of using unit weight on edges lacking the "
                  "data the weighting needs");
    app->add_option("--threads", threads, "Worker threads")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
  }

  SolverConfig Config(LossType type, Weighting w) const {
    if (!(magsac_alpha > 0.5 && magsac_alpha < 1.0)) {
      throw ConfigError("--magsac-alpha must be in (0.5, 1)");
    }
    SolverConfig config;
    const double scale = loss_scale_option->count() > 0
                             ? loss_scale
                             : DefaultLossScale(type, w);
    config.loss = LossSpec::Make(type, scale, magsac_nu, magsac_alpha);
    config.weighting = w;
    config.max_outer_irls = max_outer;
    config.max_inner_gn = max_inner;
    config.unit_weight_fallback = !strict;
    config.num_threads = threads;
    ValidateSolverConfig(config);
    return config;
  }
};

struct AucRow {
  std::string loss;
  std::string weighting;
  std::vector<double> auc;
  double median_deg = 0.0;
};

double Median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

AucRow EvaluateRotations(const std::map<ViewId, Rotation>& estimate,
                         const std::map<ViewId, Rotation>& gt,
                         const std::vector<double>& thresholds) {
  const AlignmentResult alignment = AlignRotations(estimate, gt);
  const std::vector<double> errors = ErrorValues(alignment.per_view_errors);
  AucRow row;
  for (double t : thresholds) row.auc.push_back(Auc(errors, t));
  row.median_deg = Median(errors);
  return row;
}

std::map<ViewId, Rotation> RequireGroundTruth(const ViewGraph& graph) {
  std::map<ViewId, Rotation> gt = GroundTruthRotations(graph);
  if (gt.empty()) throw DataError("graph has no ground-truth rotations");
  return gt;
}

int RunSynth(const SynthConfig& config, const std::string& out_path,
             std::ostream& out) {
  const SynthScene scene = GenerateGraph(config);
  SaveGraph(scene.graph, out_path);
  out << "cameras " << scene.graph.NumNodes() << " edges "
      << scene.graph.NumEdges() << " outliers " << scene.outlier_edges.size()
      << "\n";
  return kExitOk;
}

void PrintAucTable(const std::vector<AucRow>& rows,
                   const std::vector<double>& thresholds, std::ostream& out) {
  out << Pad("loss", 10) << Pad("weighting", 14);
  for (double t : thresholds) out << Pad("AUC@" + ThresholdLabel(t), 9);
  out << "median_deg\n";
  for (const AucRow& row : rows) {
    out << Pad(row.loss, 10) << Pad(row.weighting, 14);
    for (double a : row.auc) out << Pad(Fixed(a, 2), 9);
    out << Fixed(row.median_deg, 4) << "\n";
  }
}

std::string AucCsv(const std::vector<AucRow>& rows,
                   const std::vector<double>& thresholds) {
  std::ostringstream csv;
  csv << "loss,weighting";
  for (double t : thresholds) csv << ",auc_" << ThresholdLabel(t);
  csv << ",median_deg\n";
  for (const AucRow& row : rows) {
    csv << row.loss << "," << row.weighting;
    for (double a : row.auc) csv << "," << Fixed(a, 6);
    csv << "," << Fixed(row.median_deg, 6) << "\n";
  }
  return csv.str();
}

int Dispatch(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err) {
  CLI::App app("Robust, uncertainty-weighted rotation averaging", "rotavg");
  app.require_subcommand(1, 1);

  // synth
  SynthConfig synth;
  std::string noise_text = "0.5:0.5,0.5:5.0";
  std::string synth_out;
  bool no_cov = false;
  CLI::App* synth_cmd =
      app.add_subcommand("synth", "Generate a random view graph with ground truth");
  synth_cmd->add_option("--cameras", synth.n_cameras, "Number of cameras")
      ->check(CLI::Range(2, 1000000))
      ->capture_default_str();
  synth_cmd->add_option("--density", synth.edge_density,
                        "Probability of each camera pair being an edge")
      ->capture_default_str();
  synth_cmd->add_option("--noise", noise_text,
                        "Noise mixture as fraction:sigma_deg[,...]")
      ->capture_default_str();
  synth_cmd->add_option("--outliers", synth.outlier_fraction,
                        "Fraction of edges replaced by random rotations")
      ->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed, "Random seed")
      ->capture_default_str();
  synth_cmd->add_flag("--no-cov", no_cov,
                      "Do not write the true covariance on the edges");
  synth_cmd->add_option("--out", synth_out, "Output view-graph JSON")
      ->required();

  // weigh
  std::string pairs_path, base_path, weigh_out, cov_mode = "rotation_only";
  WeighOptions weigh;
  CLI::App* weigh_cmd = app.add_subcommand(
      "weigh", "Propagate correspondence noise into edge covariances");
  weigh_cmd->add_option("--pairs", pairs_path, "Correspondence-set JSON")
      ->required();
  weigh_cmd->add_option("--graph", base_path,
                        "Existing view graph whose edges get covariances");
  weigh_cmd->add_option("--out", weigh_out, "Output view-graph JSON")
      ->required();
  weigh_cmd->add_option("--residual-sigma", weigh.residual_sigma,
                        "Keypoint noise standard deviation in pixels")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  weigh_cmd->add_option("--cov-mode", cov_mode, "Covariance mode")
      ->check(CLI::IsMember({"rotation_only", "marginalize_translation"}))
      ->capture_default_str();
  weigh_cmd->add_option("--threads", weigh.num_threads, "Worker threads")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  // average
  SolverFlags average;
  std::string average_in, average_out;
  CLI::App* average_cmd =
      app.add_subcommand("average", "Estimate absolute rotations");
  average_cmd->add_option("--in", average_in, "Input view-graph JSON")
      ->required();
  average_cmd->add_option("--out", average_out, "Output result JSON")
      ->required();
  average.Register(average_cmd, true);

  // evaluate
  std::string est_path, gt_path, cdf_path, eval_thresholds = "2,5,10,20";
  CLI::App* evaluate_cmd = app.add_subcommand(
      "evaluate", "Align an estimate to ground truth and report AUC");
  evaluate_cmd->add_option("--est", est_path, "Result JSON")->required();
  evaluate_cmd->add_option("--gt", gt_path,
                           "View-graph JSON with ground-truth rotations")
      ->required();
  evaluate_cmd->add_option("--thresholds", eval_thresholds,
                           "Comma-separated AUC thresholds in degrees")
      ->capture_default_str();
  evaluate_cmd->add_option("--cdf", cdf_path, "Write the error CDF as CSV");

  // report
  SolverFlags report;
  std::string report_in, report_csv, report_thresholds = "2,5,10,20";
  std::string report_losses = "soft_l1,magsac";
  std::string report_weightings = "none,inlier_count,cov_full";
  CLI::App* report_cmd = app.add_subcommand(
      "report", "AUC table over loss x weighting combinations");
  report_cmd->add_option("--in", report_in,
                         "View-graph JSON with ground-truth rotations")
      ->required();
  report_cmd->add_option("--losses", report_losses, "Comma-separated losses")
      ->capture_default_str();
  report_cmd->add_option("--weightings", report_weightings,
                         "Comma-separated weighting modes")
      ->capture_default_str();
  report_cmd->add_option("--thresholds", report_thresholds,
                         "Comma-separated AUC thresholds in degrees")
      ->capture_default_str();
  report_cmd->add_option("--csv", report_csv, "Also write the table as CSV");
  report.Register(report_cmd, false);

  // bench
  SolverFlags bench;
  std::string bench_in;
  int repeat = 3;
  CLI::App* bench_cmd =
      app.add_subcommand("bench", "Time rotation averaging on a view graph");
  bench_cmd->add_option("--in", bench_in, "Input view-graph JSON")->required();
  bench_cmd->add_option("--repeat", repeat, "Number of timed runs")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bench.Register(bench_cmd, true);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (synth_cmd->parsed()) {
    synth.noise = ParseNoise(noise_text);
    synth.report_true_covariance = !no_cov;
    ValidateSynthConfig(synth);
    return RunSynth(synth, synth_out, out);
  }

  if (weigh_cmd->parsed()) {
    weigh.mode = cov_mode == "rotation_only"
                     ? CovarianceMode::kRotationOnly
                     : CovarianceMode::kMarginalizeTranslation;
    const std::vector<PairRecord> pairs = LoadPairs(pairs_path);
    ViewGraph base;
    if (!base_path.empty()) base = LoadGraph(base_path);
    WeighReport weigh_report;
    const ViewGraph graph = WeighPairs(
        pairs, weigh, base_path.empty() ? nullptr : &base, &weigh_report);
    SaveGraph(graph, weigh_out);
    out << "pairs " << weigh_report.num_pairs << " degenerate "
        << weigh_report.degenerate.size() << "\n";
    for (const EdgeKey& key : weigh_report.degenerate) {
      err << "warning: degenerate covariance on pair (" << key.first << ", "
          << key.second << "); edge left without covariance\n";
    }
    return kExitOk;
  }

  if (average_cmd->parsed()) {
    const SolverConfig config = average.Config(ParseLossType(average.loss),
                                               ParseWeighting(average.weighting));
    const TreeWeight tree = ParseTreeWeight(average.tree_weight);
    const ViewGraph graph = LoadGraph(average_in);
    const AveragingResult result = AverageRotations(graph, config, tree);
    SaveResult(result, average_out);
    out << "views " << result.rotations.size() << " iterations "
        << result.outer_iterations << " converged "
        << (result.converged ? "true" : "false") << " termination "
        << result.termination << "\n";
    if (result.num_fallback_edges > 0) {
      err << "warning: " << result.num_fallback_edges
          << " edges lacked weighting data and used unit weight\n";
    }
    return kExitOk;
  }

  if (evaluate_cmd->parsed()) {
    const std::vector<double> thresholds = ParseThresholds(eval_thresholds);
    const std::map<ViewId, Rotation> estimate = LoadResultRotations(est_path);
    const std::map<ViewId, Rotation> gt = RequireGroundTruth(LoadGraph(gt_path));
    const AlignmentResult alignment = AlignRotations(estimate, gt);
    const std::vector<double> errors = ErrorValues(alignment.per_view_errors);
    out << Pad("threshold_deg", 15) << "auc\n";
    for (double t : thresholds) {
      out << Pad(ThresholdLabel(t), 15) << Fixed(Auc(errors, t), 2) << "\n";
    }
    out << "views " << errors.size() << " median_deg "
        << Fixed(Median(errors), 4) << "\n";
    if (!cdf_path.empty()) ExportCdf(errors, cdf_path);
    return kExitOk;
  }

  if (report_cmd->parsed()) {
    const std::vector<double> thresholds = ParseThresholds(report_thresholds);
    std::vector<std::pair<LossType, Weighting>> combos;
    for (const std::string& l : SplitList(report_losses, ',')) {
      for (const std::string& w : SplitList(report_weightings, ',')) {
        combos.emplace_back(ParseLossType(l), ParseWeighting(w));
      }
    }
    std::vector<SolverConfig> configs;
    for (const auto& [l, w] : combos) configs.push_back(report.Config(l, w));
    const TreeWeight tree = ParseTreeWeight(report.tree_weight);
    const ViewGraph graph = LoadGraph(report_in);
    const std::map<ViewId, Rotation> gt = RequireGroundTruth(graph);
    std::vector<AucRow> rows;
    for (std::size_t c = 0; c < combos.size(); ++c) {
      const AveragingResult result = AverageRotations(graph, configs[c], tree);
      AucRow row = EvaluateRotations(result.rotations, gt, thresholds);
      row.loss = std::string(LossName(combos[c].first));
      row.weighting = std::string(WeightingName(combos[c].second));
      rows.push_back(std::move(row));
    }
    PrintAucTable(rows, thresholds, out);
    if (!report_csv.empty()) WriteFile(report_csv, AucCsv(rows, thresholds));
    return kExitOk;
  }

  if (bench_cmd->parsed()) {
    const SolverConfig config =
        bench.Config(ParseLossType(bench.loss), ParseWeighting(bench.weighting));
    const TreeWeight tree = ParseTreeWeight(bench.tree_weight);
    const ViewGraph graph = LoadGraph(bench_in);
    std::vector<double> seconds;
    AveragingResult result;
    for (int r = 0; r < repeat; ++r) {
      const auto start = std::chrono::steady_clock::now();
      result = AverageRotations(graph, config, tree);
      const auto stop = std::chrono::steady_clock::now();
      seconds.push_back(std::chrono::duration<double>(stop - start).count());
    }
    out << "views " << graph.NumNodes() << " edges " << graph.NumEdges()
        << " threads " << config.num_threads << " runs " << repeat << "\n";
    out << "min_s " << Fixed(*std::min_element(seconds.begin(), seconds.end()), 6)
        << " median_s " << Fixed(Median(seconds), 6) << " iterations "
        << result.outer_iterations << "\n";
    return kExitOk;
  }
  return kExitUsage;
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err) {
  try {
    return Dispatch(args, out, err);
  } catch (const InvalidArgumentError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
}

int RunCli(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return RunCli(args, std::cout, std::cerr);
}

}  // namespace rotavg
