#include "micropump/pipeline.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "micropump/clustering.hpp"
#include "micropump/dataset.hpp"
#include "micropump/errors.hpp"
#include "micropump/random.hpp"
#include "micropump/text.hpp"

namespace micropump {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Sub-stream tags under the training seed.
constexpr std::uint64_t kClusteringStream = 1;
constexpr std::uint64_t kCalibrationStream = 2;

constexpr std::string_view kAngleName = "optimal_angle_deg";

Split make_split(const std::vector<LabeledPoint>& points) {
  return {feature_rows(points), label_vector(points)};
}

FeatureScaler joint_scaler_for(const RunConfig& config, const Eigen::MatrixXd& joint) {
  const auto m = static_cast<Eigen::Index>(kFeatureCount);
  const auto& cc = config.clustering;
  if (!cc.standardize && !cc.standardize_angle) return FeatureScaler::identity(m + 1);
  std::vector<std::string_view> names(kFeatureNames.begin(), kFeatureNames.end());
  names.push_back(kAngleName);
  const FeatureScaler fitted = FeatureScaler::fit(joint, names);
  Eigen::VectorXd means = fitted.means();
  Eigen::VectorXd sds = fitted.sds();
  if (!cc.standardize) {
    means.head(m).setZero();
    sds.head(m).setOnes();
  }
  if (!cc.standardize_angle) {
    means[m] = 0.0;
    sds[m] = 1.0;
  }
  return FeatureScaler(means, sds);
}

std::string bracket_row(const Eigen::RowVectorXd& row) {
  std::string out = "[";
  for (Eigen::Index j = 0; j < row.size(); ++j) {
    if (j > 0) out += ", ";
    out += fmt::format("{:.4f}", row[j]);
  }
  return out + "]";
}

template <typename Fn>
auto with_status(const fs::path& status_path, Fn&& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    std::ofstream status(status_path, std::ios::binary);
    status << "failed: " << e.what() << "\n";
    throw;
  }
}

}  // namespace

ModeSelection parse_mode_selection(std::string_view text) {
  if (text == "both") return ModeSelection::kBoth;
  switch (parse_train_mode(text)) {
    case TrainMode::kCenters:
      return ModeSelection::kCenters;
    case TrainMode::kWeightsBias:
      break;
  }
  return ModeSelection::kWeights;
}

bool includes(ModeSelection selection, TrainMode mode) noexcept {
  if (selection == ModeSelection::kBoth) return true;
  return (selection == ModeSelection::kCenters) == (mode == TrainMode::kCenters);
}

namespace artifacts {
std::string model_file(TrainMode mode) { return fmt::format("model_{}.json", to_string(mode)); }
std::string train_report_file(TrainMode mode) { return fmt::format("train_report_{}.json", to_string(mode)); }
std::string loss_file(TrainMode mode) { return fmt::format("loss_{}.csv", to_string(mode)); }
}  // namespace artifacts

void write_text_file(const fs::path& path, std::string_view content) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  if (ec) throw PipelineError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw PipelineError("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.close();
  if (!out) throw PipelineError("failed writing " + path.string());
}

Dataset build_dataset(const RunConfig& config) {
  config.validate();
  return generate_dataset(config.effective_plant(), config.grid, config.seeds.data, config.pump,
                          config.corrections, config.flow_sign);
}

Dataset cmd_generate(const RunConfig& config, const fs::path& out) {
  Dataset dataset = build_dataset(config);
  std::ostringstream csv;
  write_dataset_csv(dataset, csv);
  write_text_file(out / artifacts::kDataset, csv.str());

  json manifest = {
      {"dataset", artifacts::kDataset},
      {"rows", {{"train", dataset.train.size()}, {"val", dataset.validation.size()}, {"test", dataset.test.size()}}},
      {"config", json::parse(serialize_run_config(config))},
  };
  write_text_file(out / artifacts::kManifest, manifest.dump(2) + "\n");
  return dataset;
}

CalibrationResult run_calibration(const RunConfig& config) {
  config.validate();
  const SimulatedDispenser dispenser(config.pump, config.corrections, config.flow_sign, config.calibration_noise,
                                     derive_seed(config.seeds.plant, {kCalibrationStream}));
  return calibrate_corrections(dispenser, config.corrections, config.calibration);
}

std::string render_calibration_table(const CalibrationResult& result, const CorrectionTable& reference) {
  const auto& got = result.recovered.bands();
  const auto& ref = reference.bands();
  std::string out = fmt::format("{:>14} {:>10} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8}\n", "band (MPa)", "run (MPa)", "F",
                                "F ref", "dF", "Z", "Z ref", "dZ");
  for (std::size_t i = 0; i < got.size(); ++i) {
    const auto& g = got[i];
    const auto& r = ref[i];
    out += fmt::format("{:>14} {:>10.4f} {:>8.4f} {:>8.4f} {:>8.4f} {:>8.4f} {:>8.4f} {:>8.4f}\n",
                       fmt::format("{:g}-{:g}", g.lo_mpa, g.hi_mpa), result.estimates[i].run_pressure_mpa, g.f, r.f,
                       g.f - r.f, g.z, r.z, g.z - r.z);
  }
  return out;
}

CalibrationResult cmd_calibrate(const RunConfig& config, const fs::path& out) {
  CalibrationResult result = run_calibration(config);
  json bands = json::array();
  for (std::size_t i = 0; i < result.recovered.bands().size(); ++i) {
    const auto& b = result.recovered.bands()[i];
    const auto& e = result.estimates[i];
    bands.push_back({{"lo", b.lo_mpa},
                     {"hi", b.hi_mpa},
                     {"f", b.f},
                     {"z", b.z},
                     {"run_pressure", e.run_pressure_mpa},
                     {"volume_ml", e.volume_ml},
                     {"raw_f", e.raw_f},
                     {"raw_z", e.raw_z}});
  }
  write_text_file(out / artifacts::kCorrections, json{{"bands", bands}}.dump(2) + "\n");
  write_text_file(out / artifacts::kCalibrationTable, render_calibration_table(result, config.corrections));
  return result;
}

TrainingRun run_training(const RunConfig& config, const Dataset& dataset, ModeSelection modes) {
  config.validate();
  const Split train_split = make_split(dataset.train);
  const Split validation_split = make_split(dataset.validation);
  const auto m = static_cast<Eigen::Index>(kFeatureCount);
  if (train_split.size() < static_cast<Eigen::Index>(config.clustering.k)) {
    throw PipelineError("training split is smaller than the number of clusters");
  }

  Eigen::MatrixXd joint(train_split.size(), m + 1);
  joint << train_split.features, train_split.targets;
  const FeatureScaler joint_scaler = joint_scaler_for(config, joint);
  const Eigen::MatrixXd joint_std = joint_scaler.transform_rows(joint);

  KMeansOptions options;
  options.k = config.clustering.k;
  options.seed = derive_seed(config.seeds.train, {kClusteringStream});
  options.max_iter = config.clustering.max_iter;
  options.restarts = config.clustering.restarts;

  TrainingRun run;
  run.kmeans = kmeans(joint_std, options);
  if (!run.kmeans.converged) {
    throw PipelineError(
        fmt::format("k-means did not converge within {} iterations", config.clustering.max_iter));
  }
  run.clusters = make_cluster_model(run.kmeans, joint_scaler);
  run.initial = initialize_from_clusters(run.kmeans, joint_std, run.clusters.feature_scaler(), train_split,
                                         config.clustering.width_floor);
  run.initial.metadata.seed = config.seeds.train;

  if (includes(modes, TrainMode::kWeightsBias)) {
    run.weights = train(run.initial, train_split, validation_split, config.train_config(TrainMode::kWeightsBias));
  }
  if (includes(modes, TrainMode::kCenters)) {
    run.centers = train(run.initial, train_split, validation_split, config.train_config(TrainMode::kCenters));
  }
  return run;
}

std::string render_center_table(const TrainingRun& run, const Dataset& dataset) {
  const Eigen::MatrixXd kmeans_raw = run.clusters.raw_centers();
  std::string header = "center  k-means [mu_cP, back_pressure_MPa, omega_rev_min, valve_flow_mL_min, angle_deg]";
  Eigen::MatrixXd trained_raw;
  if (run.centers) {
    const RbfModel& model = run.centers->model;
    const Eigen::MatrixXd x = feature_rows(dataset.train);
    const Eigen::VectorXd predicted = predict(model, x);
    const Eigen::MatrixXd x_std = model.scaler.transform_rows(x);
    const Eigen::Index k = model.hidden_count();
    Eigen::VectorXd sums = Eigen::VectorXd::Zero(k);
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
    for (Eigen::Index i = 0; i < x_std.rows(); ++i) {
      const auto j = static_cast<Eigen::Index>(nearest_center(x_std.row(i).transpose(), model.centers));
      sums[j] += predicted[i];
      counts[j] += 1.0;
    }
    trained_raw.resize(k, model.input_dim() + 1);
    trained_raw.leftCols(model.input_dim()) = model.scaler.inverse_transform_rows(model.centers);
    for (Eigen::Index j = 0; j < k; ++j) {
      // A center no training point is nearest to reports its own prediction.
      const double angle = counts[j] > 0.0 ? sums[j] / counts[j]
                                           : forward(model, trained_raw.row(j).head(model.input_dim()).transpose());
      trained_raw(j, model.input_dim()) = angle;
    }
    header += "  trained centers [same fields, mean predicted angle]";
  }
  std::string out = header + "\n";
  for (Eigen::Index j = 0; j < kmeans_raw.rows(); ++j) {
    out += fmt::format("{:>6}  {}", j + 1, bracket_row(kmeans_raw.row(j)));
    if (trained_raw.size() > 0) out += "  " + bracket_row(trained_raw.row(j));
    out += "\n";
  }
  return out;
}

std::string serialize_train_report(const TrainReport& report) {
  json doc = {
      {"mode", report.model.metadata.mode},
      {"best_epoch", report.best_epoch},
      {"epochs_run", report.epochs_run},
      {"converged", report.converged},
      {"stop_reason", report.stop_reason},
      {"final_loss", report.model.metadata.final_loss},
      {"best_validation_loss", report.validation_loss[static_cast<std::size_t>(report.best_epoch)]},
      {"train_loss", report.train_loss},
      {"validation_loss", report.validation_loss},
  };
  return doc.dump(2) + "\n";
}

std::string render_loss_csv(const TrainReport& report) {
  std::string out = "epoch,train_loss,validation_loss\n";
  for (std::size_t i = 0; i < report.train_loss.size(); ++i) {
    out += fmt::format("{},{},{}\n", i, format_full(report.train_loss[i]), format_full(report.validation_loss[i]));
  }
  return out;
}

TrainingRun cmd_train(const RunConfig& config, const Dataset& dataset, ModeSelection modes, const fs::path& out) {
  const fs::path status = out / artifacts::kTrainStatus;
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw PipelineError("cannot create directory " + out.string() + ": " + ec.message());
  return with_status(status, [&] {
    TrainingRun run = run_training(config, dataset, modes);
    write_text_file(out / artifacts::kClusters, serialize_cluster_model(run.clusters));
    write_text_file(out / artifacts::kCenters, render_center_table(run, dataset));
    for (const auto* report : {&run.weights, &run.centers}) {
      if (!*report) continue;
      const TrainMode mode = parse_train_mode((*report)->model.metadata.mode);
      write_text_file(out / artifacts::model_file(mode), serialize_model((*report)->model));
      write_text_file(out / artifacts::train_report_file(mode), serialize_train_report(**report));
      write_text_file(out / artifacts::loss_file(mode), render_loss_csv(**report));
    }
    write_text_file(status, "ok\n");
    return run;
  });
}

void check_model_matches(const RbfModel& model, const ClusterModel& clusters) {
  model.validate();
  if (model.input_dim() != static_cast<Eigen::Index>(kFeatureCount)) {
    throw PipelineError(fmt::format("model expects {} features, the dataset has {}", model.input_dim(), kFeatureCount));
  }
  const FeatureScaler expected = clusters.feature_scaler();
  if (model.scaler.means() != expected.means() || model.scaler.sds() != expected.sds()) {
    throw PipelineError("model feature scaling does not match the clustering it is evaluated against");
  }
  if (static_cast<std::size_t>(model.hidden_count()) != clusters.k()) {
    throw PipelineError(
        fmt::format("model has {} centers, the clustering has {}", model.hidden_count(), clusters.k()));
  }
}

ClusterReport run_evaluation(const RunConfig& config, const Dataset& dataset, const ClusterModel& clusters,
                             const RbfModel* weights_model, const RbfModel* centers_model) {
  config.validate();
  if (dataset.test.empty()) throw PipelineError("test split is empty");
  if (weights_model) check_model_matches(*weights_model, clusters);
  if (centers_model) check_model_matches(*centers_model, clusters);
  EvaluationInputs inputs;
  inputs.weights_model = weights_model;
  inputs.centers_model = centers_model;
  inputs.fixed_angle = config.fixed_angle;
  return evaluate(dataset.test, config.effective_plant(), clusters, inputs);
}

ClusterReport cmd_evaluate(const RunConfig& config, const Dataset& dataset, const ClusterModel& clusters,
                           const RbfModel* weights_model, const RbfModel* centers_model, const fs::path& out) {
  ClusterReport report = run_evaluation(config, dataset, clusters, weights_model, centers_model);
  write_text_file(out / artifacts::kEvaluation, render_report_text(report));
  write_text_file(out / artifacts::kDrops, render_drops_csv(report));
  write_text_file(out / artifacts::kAngles, render_angles_csv(report));
  return report;
}

std::vector<Prediction> predict_rows(const RbfModel& model, const std::vector<Features>& rows,
                                     std::optional<double> period_s) {
  model.validate();
  if (model.input_dim() != static_cast<Eigen::Index>(kFeatureCount)) {
    throw PipelineError(fmt::format("model expects {} features, not {}", model.input_dim(), kFeatureCount));
  }
  std::vector<Prediction> out;
  out.reserve(rows.size());
  for (const auto& f : rows) {
    const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(f.data(), static_cast<Eigen::Index>(f.size()));
    Prediction p;
    p.features = f;
    p.angle_deg = applied_angle(forward(model, x));
    if (period_s) p.overlap_time_s = overlap_time(*period_s, p.angle_deg);
    out.push_back(p);
  }
  return out;
}

std::vector<Features> read_feature_csv(std::istream& in) {
  std::vector<Features> rows;
  std::array<std::size_t, kFeatureCount> columns{0, 1, 2, 3};
  std::size_t width = kFeatureCount;
  bool first = true;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (first) {
      first = false;
      const bool header = !parse_double(trim(fields.front())).has_value();
      if (header) {
        for (std::size_t j = 0; j < kFeatureCount; ++j) {
          std::size_t found = fields.size();
          for (std::size_t c = 0; c < fields.size(); ++c) {
            if (trim(fields[c]) == kFeatureNames[j]) found = c;
          }
          if (found == fields.size()) {
            throw LoadError(fmt::format("line {}: header lacks column {}", line_no, kFeatureNames[j]));
          }
          columns[j] = found;
        }
        width = fields.size();
        continue;
      }
    }
    if (fields.size() != width) {
      throw LoadError(fmt::format("line {}: expected {} fields, found {}", line_no, width, fields.size()));
    }
    Features f{};
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
      const auto value = parse_double(trim(fields[columns[j]]));
      if (!value || !std::isfinite(*value)) {
        throw LoadError(fmt::format("line {}: {} is not a finite number", line_no, kFeatureNames[j]));
      }
      f[j] = *value;
    }
    rows.push_back(f);
  }
  return rows;
}

std::string render_predictions_csv(const std::vector<Prediction>& predictions) {
  const bool with_time = !predictions.empty() && predictions.front().overlap_time_s.has_value();
  std::string out;
  for (const auto& name : kFeatureNames) out += std::string(name) + ",";
  out += with_time ? "angle_deg,t_op_s\n" : "angle_deg\n";
  for (const auto& p : predictions) {
    for (double v : p.features) out += format_full(v) + ",";
    out += format_full(p.angle_deg);
    if (with_time) out += "," + format_full(*p.overlap_time_s);
    out += "\n";
  }
  return out;
}

ReportRun cmd_report(const RunConfig& config, const fs::path& out) {
  ReportRun run;
  write_text_file(out / "config.json", serialize_run_config(config));
  run.dataset = cmd_generate(config, out);
  run.training = cmd_train(config, run.dataset, ModeSelection::kBoth, out);
  run.report = cmd_evaluate(config, run.dataset, run.training.clusters, &run.training.weights->model,
                            &run.training.centers->model, out);
  return run;
}

}  // namespace micropump
