#pragma once

// Per-cluster comparison of overlap-angle strategies on the test split:
// no overlap, a fixed benchmark angle, and the angles predicted by networks
// trained in each supervised mode. Test points are grouped by the nearest
// joint-space K-means center.

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "micropump/clustering.hpp"
#include "micropump/plant.hpp"
#include "micropump/rbf.hpp"

namespace micropump {

// Joint (features, angle) clustering as needed to group new points.
struct ClusterModel {
  FeatureScaler joint_scaler;  // M + 1 dimensions
  Eigen::MatrixXd centers;     // K x (M + 1), standardized
  int iterations = 0;
  bool converged = false;
  double quantization_error = 0.0;
  double squared_error = 0.0;
  std::vector<std::size_t> sizes;

  std::size_t k() const noexcept { return static_cast<std::size_t>(centers.rows()); }
  Eigen::VectorXd joint_point(const LabeledPoint& lp) const;
  std::size_t assign(const LabeledPoint& lp) const;
  // Centers in raw units: features then angle.
  Eigen::MatrixXd raw_centers() const;
  // Scaler over the first M (feature) dimensions.
  FeatureScaler feature_scaler() const;
};

ClusterModel make_cluster_model(const ClusterResult& result, const FeatureScaler& joint_scaler);

std::string serialize_cluster_model(const ClusterModel& model);
ClusterModel parse_cluster_model(std::string_view text);
void save_cluster_model(const ClusterModel& model, const std::filesystem::path& path);
ClusterModel load_cluster_model(const std::filesystem::path& path);

enum class Strategy { kNone = 0, kFixed = 1, kWeights = 2, kCenters = 3 };
inline constexpr std::size_t kStrategyCount = 4;

struct ClusterRow {
  std::size_t cluster = 0;
  std::size_t count = 0;
  // Mean measured pulse (MPa) per strategy; empty when the cluster holds no
  // test points or the strategy's model is absent.
  std::array<std::optional<double>, kStrategyCount> drop;
  // Mean applied angle (degrees) per strategy.
  std::array<std::optional<double>, kStrategyCount> angle;
  std::optional<double> label_angle;
};

struct ClusterReport {
  double fixed_angle = 30.0;
  bool has_weights = false;
  bool has_centers = false;
  std::vector<ClusterRow> rows;
};

struct EvaluationInputs {
  const RbfModel* weights_model = nullptr;
  const RbfModel* centers_model = nullptr;
  double fixed_angle = 30.0;
  // Measurement session used for the comparison runs; the sweep that
  // labels the dataset uses session 0.
  std::uint64_t trial = 1;
};

// Predictions are clamped to [0, 45] degrees before they are applied.
double applied_angle(double predicted);

ClusterReport evaluate(const std::vector<LabeledPoint>& test, const PlantModel& plant,
                       const ClusterModel& clusters, const EvaluationInputs& inputs);

std::string render_report_text(const ClusterReport& report);
// cluster,count,none,fixed,weights_bias,centers with full precision.
std::string render_drops_csv(const ClusterReport& report);
std::string render_angles_csv(const ClusterReport& report);

}  // namespace micropump
