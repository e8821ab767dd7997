#pragma once

// The end-to-end run: generate a dataset from the synthetic plant, replay
// the correction calibration, cluster and train, evaluate the strategies on
// the test split, and predict angles for new operating points. Each command
// writes its artifacts under an output directory and returns what it built
// so callers can chain steps in-process.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "micropump/calibration.hpp"
#include "micropump/config.hpp"
#include "micropump/evaluation.hpp"
#include "micropump/plant.hpp"
#include "micropump/rbf.hpp"
#include "micropump/training.hpp"

namespace micropump {

enum class ModeSelection { kWeights, kCenters, kBoth };
ModeSelection parse_mode_selection(std::string_view text);
bool includes(ModeSelection selection, TrainMode mode) noexcept;

namespace artifacts {
inline constexpr const char* kDataset = "dataset.csv";
inline constexpr const char* kManifest = "manifest.json";
inline constexpr const char* kCorrections = "corrections.json";
inline constexpr const char* kCalibrationTable = "calibration.txt";
inline constexpr const char* kClusters = "clusters.json";
inline constexpr const char* kCenters = "centers.txt";
inline constexpr const char* kTrainStatus = "train_status.txt";
inline constexpr const char* kEvaluation = "evaluation.txt";
inline constexpr const char* kDrops = "drops.csv";
inline constexpr const char* kAngles = "angles.csv";

std::string model_file(TrainMode mode);         // model_<mode>.json
std::string train_report_file(TrainMode mode);  // train_report_<mode>.json
std::string loss_file(TrainMode mode);          // loss_<mode>.csv
}  // namespace artifacts

// Dataset generation with the configured plant, grid, pump and seeds.
Dataset build_dataset(const RunConfig& config);
Dataset cmd_generate(const RunConfig& config, const std::filesystem::path& out);

CalibrationResult run_calibration(const RunConfig& config);
// Writes the recovered table and a text comparison with the reference.
CalibrationResult cmd_calibrate(const RunConfig& config, const std::filesystem::path& out);
std::string render_calibration_table(const CalibrationResult& result, const CorrectionTable& reference);

struct TrainingRun {
  ClusterModel clusters;
  ClusterResult kmeans;
  RbfModel initial;
  std::optional<TrainReport> weights;
  std::optional<TrainReport> centers;
};

// Clusters the training split in joint (features, angle) space and trains
// the selected modes from the shared initialization. Throws PipelineError
// when clustering does not converge.
TrainingRun run_training(const RunConfig& config, const Dataset& dataset, ModeSelection modes);
TrainingRun cmd_train(const RunConfig& config, const Dataset& dataset, ModeSelection modes,
                      const std::filesystem::path& out);
// Raw-unit center table: K-means centers and, when present, trained centers
// with the mean predicted angle over the training points nearest each.
std::string render_center_table(const TrainingRun& run, const Dataset& dataset);
std::string serialize_train_report(const TrainReport& report);
std::string render_loss_csv(const TrainReport& report);

// Throws PipelineError when a model was not trained against `clusters`.
void check_model_matches(const RbfModel& model, const ClusterModel& clusters);

ClusterReport run_evaluation(const RunConfig& config, const Dataset& dataset, const ClusterModel& clusters,
                             const RbfModel* weights_model, const RbfModel* centers_model);
ClusterReport cmd_evaluate(const RunConfig& config, const Dataset& dataset, const ClusterModel& clusters,
                           const RbfModel* weights_model, const RbfModel* centers_model,
                           const std::filesystem::path& out);

struct Prediction {
  Features features{};
  double angle_deg = 0.0;  // clamped to the actuated range
  std::optional<double> overlap_time_s;
};

std::vector<Prediction> predict_rows(const RbfModel& model, const std::vector<Features>& rows,
                                     std::optional<double> period_s);
// Four feature columns per line in the model's feature order. A header is
// optional; when present its columns are matched by name, so dataset files
// are accepted too. Throws LoadError naming the line of a malformed row.
std::vector<Features> read_feature_csv(std::istream& in);
std::string render_predictions_csv(const std::vector<Prediction>& predictions);

struct ReportRun {
  Dataset dataset;
  TrainingRun training;
  ClusterReport report;
};

// generate, train both modes and evaluate into one directory.
ReportRun cmd_report(const RunConfig& config, const std::filesystem::path& out);

// Writes `content` to `path`, creating parent directories. Throws
// PipelineError when the file cannot be written.
void write_text_file(const std::filesystem::path& path, std::string_view content);

}  // namespace micropump
