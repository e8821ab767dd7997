#pragma once

// K-means over (features, angle) rows and the per-center Gaussian widths
// derived from the resulting clusters.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace micropump {

inline constexpr double kDefaultWidthFloor = 1e-3;

struct KMeansOptions {
  std::size_t k = 5;
  std::uint64_t seed = 0;
  int max_iter = 300;
  // Independent initializations; the lowest squared error wins, ties going
  // to the earlier restart.
  int restarts = 10;
};

struct ClusterResult {
  Eigen::MatrixXd centers;  // K x D
  std::vector<std::size_t> assignments;
  int iterations = 0;
  bool converged = false;
  // Sum of unsquared point-to-center distances.
  double quantization_error = 0.0;
  // Sum of squared distances, the objective the mean update minimizes.
  double squared_error = 0.0;
  std::vector<double> quantization_history;
  std::vector<double> squared_history;
  std::uint64_t seed = 0;  // seed of the winning restart

  std::size_t k() const noexcept { return static_cast<std::size_t>(centers.rows()); }
  std::vector<std::size_t> cluster_sizes() const;
};

// Points are rows. Throws DomainError when N < K or K == 0.
ClusterResult kmeans(const Eigen::MatrixXd& points, const KMeansOptions& options);

// One Lloyd run from the given initial centers; used by kmeans and by tests.
ClusterResult lloyd(const Eigen::MatrixXd& points, Eigen::MatrixXd initial_centers, int max_iter);

double quantization_error(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centers,
                          std::span<const std::size_t> assignments);
double squared_error(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centers,
                     std::span<const std::size_t> assignments);

// Index of the nearest row of `centers` (Euclidean, ties to the lower index).
std::size_t nearest_center(const Eigen::VectorXd& point, const Eigen::MatrixXd& centers);

// Mean distance from each cluster's points to its center, measured over the
// first `dims` coordinates. Singleton clusters and spreads below `floor`
// get `floor`. Throws DomainError on an empty cluster.
Eigen::VectorXd cluster_widths(const Eigen::MatrixXd& points,
                               std::span<const std::size_t> assignments,
                               const Eigen::MatrixXd& centers, Eigen::Index dims,
                               double floor = kDefaultWidthFloor);

}  // namespace micropump
