// micropump: generate, calibrate, train, evaluate, predict, report.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "micropump/config.hpp"
#include "micropump/dataset.hpp"
#include "micropump/errors.hpp"
#include "micropump/evaluation.hpp"
#include "micropump/pipeline.hpp"
#include "micropump/text.hpp"

namespace fs = std::filesystem;
using namespace micropump;

namespace {

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> k;
  std::optional<double> fixed_angle;

  RunConfig resolve() const {
    RunConfig config = config_path.empty() ? RunConfig{} : load_run_config(config_path);
    if (seed) config.set_all_seeds(*seed);
    if (out) config.output_dir = *out;
    if (k) config.clustering.k = *k;
    if (fixed_angle) config.fixed_angle = *fixed_angle;
    config.validate();
    return config;
  }
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config_path, "Run configuration (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--seed", opts.seed, "Override the plant, data and train seeds");
  cmd->add_option("--out", opts.out, "Output directory");
}

Features parse_features(const std::string& text) {
  const auto fields = split_fields(text);
  if (fields.size() != kFeatureCount) {
    throw LoadError(fmt::format("--features needs {} comma-separated values", kFeatureCount));
  }
  Features f{};
  for (std::size_t j = 0; j < kFeatureCount; ++j) {
    const auto v = parse_double(trim(fields[j]));
    if (!v) throw LoadError(fmt::format("--features: {} is not a number", kFeatureNames[j]));
    f[j] = *v;
  }
  return f;
}

Dataset load_dataset_for(const RunConfig& config, const std::string& dataset_path) {
  return load_dataset(dataset_path.empty() ? config.output_dir / artifacts::kDataset : fs::path(dataset_path));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Overlap-angle optimization for a constant-flow parallel micropump"};
  app.require_subcommand(1);

  CommonOptions common;
  std::string mode_text = "both";
  std::string dataset_path;
  std::string models_dir;
  std::string clusters_path;
  std::string model_path;
  std::string features_text;
  std::string csv_path;
  std::optional<double> period;

  auto* generate = app.add_subcommand("generate", "Sample and label the operating-point dataset");
  add_common(generate, common);

  auto* calibrate = app.add_subcommand("calibrate", "Recover the correction table from a simulated dispenser");
  add_common(calibrate, common);

  auto* train_cmd = app.add_subcommand("train", "Cluster the training split and train the RBF network");
  add_common(train_cmd, common);
  train_cmd->add_option("--mode", mode_text, "weights, centers or both")
      ->check(CLI::IsMember({"weights", "weights_bias", "centers", "both"}));
  train_cmd->add_option("--k", common.k, "Number of clusters");
  train_cmd->add_option("--dataset", dataset_path, "Dataset CSV (default: <out>/dataset.csv)");

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Compare overlap strategies per cluster on the test split");
  add_common(evaluate_cmd, common);
  evaluate_cmd->add_option("--mode", mode_text, "Models to evaluate: weights, centers or both")
      ->check(CLI::IsMember({"weights", "weights_bias", "centers", "both"}));
  evaluate_cmd->add_option("--fixed-angle", common.fixed_angle, "Fixed benchmark angle (deg)");
  evaluate_cmd->add_option("--dataset", dataset_path, "Dataset CSV (default: <out>/dataset.csv)");
  evaluate_cmd->add_option("--models", models_dir, "Directory holding the model files (default: <out>)");
  evaluate_cmd->add_option("--clusters", clusters_path, "Cluster file (default: <models>/clusters.json)");

  auto* predict_cmd = app.add_subcommand("predict", "Predict overlap angles for operating points");
  predict_cmd->add_option("--model", model_path, "Model file")->required()->check(CLI::ExistingFile);
  auto* features_opt = predict_cmd->add_option(
      "--features", features_text, "mu_cP,back_pressure_MPa,omega_rev_min,valve_flow_mL_min");
  auto* csv_opt = predict_cmd->add_option("--csv", csv_path, "CSV of feature rows")->check(CLI::ExistingFile);
  features_opt->excludes(csv_opt);
  predict_cmd->add_option("--period", period, "Cycle period (s); adds the overlap time column")
      ->check(CLI::PositiveNumber);

  auto* report_cmd = app.add_subcommand("report", "Run generate, train (both modes) and evaluate");
  add_common(report_cmd, common);
  report_cmd->add_option("--k", common.k, "Number of clusters");
  report_cmd->add_option("--fixed-angle", common.fixed_angle, "Fixed benchmark angle (deg)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (generate->parsed()) {
      const RunConfig config = common.resolve();
      const Dataset ds = cmd_generate(config, config.output_dir);
      std::cout << fmt::format("wrote {} ({} train, {} val, {} test)\n",
                               (config.output_dir / artifacts::kDataset).string(), ds.train.size(),
                               ds.validation.size(), ds.test.size());
    } else if (calibrate->parsed()) {
      const RunConfig config = common.resolve();
      const CalibrationResult result = cmd_calibrate(config, config.output_dir);
      std::cout << render_calibration_table(result, config.corrections);
    } else if (train_cmd->parsed()) {
      const RunConfig config = common.resolve();
      const Dataset ds = load_dataset_for(config, dataset_path);
      const TrainingRun run = cmd_train(config, ds, parse_mode_selection(mode_text), config.output_dir);
      std::cout << render_center_table(run, ds);
      for (const auto* report : {&run.weights, &run.centers}) {
        if (!*report) continue;
        const auto& r = **report;
        std::cout << fmt::format("{}: best epoch {} of {}, train SSE {:.4f}, validation SSE {:.4f} ({})\n",
                                 r.model.metadata.mode, r.best_epoch, r.epochs_run, r.model.metadata.final_loss,
                                 r.validation_loss[static_cast<std::size_t>(r.best_epoch)], r.stop_reason);
      }
    } else if (evaluate_cmd->parsed()) {
      const RunConfig config = common.resolve();
      const Dataset ds = load_dataset_for(config, dataset_path);
      const fs::path models = models_dir.empty() ? config.output_dir : fs::path(models_dir);
      const ClusterModel clusters =
          load_cluster_model(clusters_path.empty() ? models / artifacts::kClusters : fs::path(clusters_path));
      const ModeSelection modes = parse_mode_selection(mode_text);
      std::optional<RbfModel> weights;
      std::optional<RbfModel> centers;
      if (includes(modes, TrainMode::kWeightsBias)) {
        weights = load_model(models / artifacts::model_file(TrainMode::kWeightsBias));
      }
      if (includes(modes, TrainMode::kCenters)) {
        centers = load_model(models / artifacts::model_file(TrainMode::kCenters));
      }
      const ClusterReport report = cmd_evaluate(config, ds, clusters, weights ? &*weights : nullptr,
                                                centers ? &*centers : nullptr, config.output_dir);
      std::cout << render_report_text(report);
    } else if (predict_cmd->parsed()) {
      const RbfModel model = load_model(model_path);
      std::vector<Features> rows;
      if (!features_text.empty()) {
        rows.push_back(parse_features(features_text));
      } else if (!csv_path.empty()) {
        std::ifstream in(csv_path, std::ios::binary);
        if (!in) throw LoadError("cannot open " + csv_path);
        rows = read_feature_csv(in);
      } else {
        rows = read_feature_csv(std::cin);
      }
      std::cout << render_predictions_csv(predict_rows(model, rows, period));
    } else if (report_cmd->parsed()) {
      const RunConfig config = common.resolve();
      const ReportRun run = cmd_report(config, config.output_dir);
      std::cout << render_report_text(run.report);
    }
  } catch (const std::exception& e) {
    std::cerr << "micropump: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
