#pragma once

// Supervised phase of RBF training. Exactly one parameter group is
// gradient-trained per run: either the output layer (weights and bias) or
// the center locations. Widths are never gradient-trained; in center mode
// they are recomputed from the current clusters every epoch and the output
// layer is re-solved by least squares after every center step.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "micropump/clustering.hpp"
#include "micropump/rbf.hpp"

namespace micropump {

enum class TrainMode { kWeightsBias, kCenters };

std::string_view to_string(TrainMode mode) noexcept;
// Accepts "weights_bias"/"weights" and "centers".
TrainMode parse_train_mode(std::string_view text);

struct TrainConfig {
  TrainMode mode = TrainMode::kWeightsBias;
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int epochs = 500;
  // Stop after this many epochs without a new best validation loss.
  int patience = 50;
  std::uint64_t seed = 0;
  double width_floor = kDefaultWidthFloor;
  // Output-layer gradient treated as zero below
  // tolerance * (1 + |2 V^T y|_inf).
  double stationarity_tolerance = 1e-8;

  void validate() const;
};

// Raw-unit feature rows and their target angles.
struct Split {
  Eigen::MatrixXd features;
  Eigen::VectorXd targets;

  Eigen::Index size() const noexcept { return features.rows(); }
};

struct TrainReport {
  RbfModel model;  // lowest validation loss seen, ties to the earlier epoch
  std::vector<double> train_loss;       // index 0 is the initialization
  std::vector<double> validation_loss;
  int best_epoch = 0;
  int epochs_run = 0;
  bool converged = false;
  std::string stop_reason;
};

class Adam {
 public:
  Adam(const TrainConfig& config, Eigen::Index parameter_count);

  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad);
  int steps() const noexcept { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  Eigen::VectorXd m_, v_;
  int t_ = 0;
};

// Sum of squared residuals.
double sse_loss(const Eigen::VectorXd& predictions, const Eigen::VectorXd& truths);

// dE/d[weights; bias], length K + 1.
Eigen::VectorXd grad_weights(const RbfModel& model, const Eigen::MatrixXd& rows,
                             const Eigen::VectorXd& targets);
// dE/dc_j in standardized coordinates, K x M.
Eigen::MatrixXd grad_centers(const RbfModel& model, const Eigen::MatrixXd& rows,
                             const Eigen::VectorXd& targets);

// Minimum-norm least-squares solution of V W = y via a complete orthogonal
// decomposition. Throws DomainError on non-finite input.
Eigen::VectorXd solve_least_squares(const Eigen::MatrixXd& v, const Eigen::VectorXd& y);

// |V^T (V W - y)|_inf
double normal_residual(const Eigen::MatrixXd& v, const Eigen::VectorXd& w, const Eigen::VectorXd& y);
bool satisfies_normal_equations(const Eigen::MatrixXd& v, const Eigen::VectorXd& w,
                                const Eigen::VectorXd& y, double tolerance = 1e-8);

// Replaces the output layer with the least-squares fit on `data`.
RbfModel fit_output_layer(RbfModel model, const Split& data);

// Builds the initial network from a joint-space clustering: the first M
// coordinates of each cluster center become the RBF center, widths follow
// from the cluster spreads and the output layer from least squares.
RbfModel initialize_from_clusters(const ClusterResult& clusters, const Eigen::MatrixXd& joint_points,
                                  const FeatureScaler& scaler, const Split& train,
                                  double width_floor = kDefaultWidthFloor);

// Throws TrainingError when a loss becomes non-finite.
TrainReport train(const RbfModel& initial, const Split& train_split, const Split& validation_split,
                  const TrainConfig& config);

}  // namespace micropump
