#include "micropump/clustering.hpp"

#include <limits>

#include "micropump/errors.hpp"
#include "micropump/random.hpp"

namespace micropump {
namespace {

void check_assignments(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centers,
                       std::span<const std::size_t> assignments) {
  if (assignments.size() != static_cast<std::size_t>(points.rows())) {
    throw DomainError("one assignment per point is required");
  }
  if (points.rows() > 0 && points.cols() != centers.cols()) {
    throw DomainError("points and centers differ in dimension");
  }
  for (const auto a : assignments) {
    if (a >= static_cast<std::size_t>(centers.rows())) {
      throw DomainError("cluster index out of range");
    }
  }
}

Eigen::MatrixXd recenter(const Eigen::MatrixXd& points, std::span<const std::size_t> assignments,
                         const Eigen::MatrixXd& previous) {
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(previous.rows(), previous.cols());
  std::vector<std::size_t> counts(static_cast<std::size_t>(previous.rows()), 0);
  for (Eigen::Index u = 0; u < points.rows(); ++u) {
    const auto j = assignments[static_cast<std::size_t>(u)];
    sums.row(static_cast<Eigen::Index>(j)) += points.row(u);
    ++counts[j];
  }
  Eigen::MatrixXd centers = previous;
  for (Eigen::Index j = 0; j < previous.rows(); ++j) {
    const auto n = counts[static_cast<std::size_t>(j)];
    if (n > 0) centers.row(j) = sums.row(j) / static_cast<double>(n);
  }
  return centers;
}

// Moves the point farthest from its own center into each empty cluster.
void repair_empty_clusters(const Eigen::MatrixXd& points, Eigen::MatrixXd& centers,
                           std::vector<std::size_t>& assignments) {
  const auto k = static_cast<std::size_t>(centers.rows());
  std::vector<std::size_t> counts(k, 0);
  for (const auto a : assignments) ++counts[a];
  for (std::size_t j = 0; j < k; ++j) {
    if (counts[j] > 0) continue;
    double farthest = -1.0;
    std::size_t pick = 0;
    for (std::size_t u = 0; u < assignments.size(); ++u) {
      if (counts[assignments[u]] < 2) continue;
      const auto ui = static_cast<Eigen::Index>(u);
      const double d = (points.row(ui) - centers.row(static_cast<Eigen::Index>(assignments[u]))).squaredNorm();
      if (d > farthest) {
        farthest = d;
        pick = u;
      }
    }
    --counts[assignments[pick]];
    assignments[pick] = j;
    ++counts[j];
    centers.row(static_cast<Eigen::Index>(j)) = points.row(static_cast<Eigen::Index>(pick));
  }
}

}  // namespace

std::vector<std::size_t> ClusterResult::cluster_sizes() const {
  std::vector<std::size_t> sizes(k(), 0);
  for (const auto a : assignments) ++sizes[a];
  return sizes;
}

std::size_t nearest_center(const Eigen::VectorXd& point, const Eigen::MatrixXd& centers) {
  if (point.size() != centers.cols()) throw DomainError("point and centers differ in dimension");
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < centers.rows(); ++j) {
    const double d = (point.transpose() - centers.row(j)).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<std::size_t>(j);
    }
  }
  return best;
}

double quantization_error(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centers,
                          std::span<const std::size_t> assignments) {
  check_assignments(points, centers, assignments);
  double total = 0.0;
  for (Eigen::Index u = 0; u < points.rows(); ++u) {
    const auto j = static_cast<Eigen::Index>(assignments[static_cast<std::size_t>(u)]);
    total += (points.row(u) - centers.row(j)).norm();
  }
  return total;
}

double squared_error(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centers,
                     std::span<const std::size_t> assignments) {
  check_assignments(points, centers, assignments);
  double total = 0.0;
  for (Eigen::Index u = 0; u < points.rows(); ++u) {
    const auto j = static_cast<Eigen::Index>(assignments[static_cast<std::size_t>(u)]);
    total += (points.row(u) - centers.row(j)).squaredNorm();
  }
  return total;
}

ClusterResult lloyd(const Eigen::MatrixXd& points, Eigen::MatrixXd initial_centers, int max_iter) {
  const auto n = static_cast<std::size_t>(points.rows());
  const auto k = static_cast<std::size_t>(initial_centers.rows());
  if (k == 0) throw DomainError("k-means needs K >= 1");
  if (n < k) throw DomainError("k-means needs at least K points");
  if (initial_centers.cols() != points.cols()) throw DomainError("initial centers have the wrong dimension");
  if (max_iter < 1) throw DomainError("max_iter must be positive");

  ClusterResult result;
  result.centers = std::move(initial_centers);
  std::vector<std::size_t> previous;
  std::vector<std::size_t> current(n, 0);

  for (int iter = 1; iter <= max_iter; ++iter) {
    for (std::size_t u = 0; u < n; ++u) {
      current[u] = nearest_center(points.row(static_cast<Eigen::Index>(u)).transpose(), result.centers);
    }
    repair_empty_clusters(points, result.centers, current);
    result.iterations = iter;
    if (current == previous) {
      result.converged = true;
      break;
    }
    result.centers = recenter(points, current, result.centers);
    result.quantization_history.push_back(quantization_error(points, result.centers, current));
    result.squared_history.push_back(squared_error(points, result.centers, current));
    previous = current;
  }

  result.assignments = std::move(current);
  if (!result.converged) result.centers = recenter(points, result.assignments, result.centers);
  result.quantization_error = quantization_error(points, result.centers, result.assignments);
  result.squared_error = squared_error(points, result.centers, result.assignments);
  return result;
}

ClusterResult kmeans(const Eigen::MatrixXd& points, const KMeansOptions& options) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (options.k == 0) throw DomainError("k-means needs K >= 1");
  if (n < options.k) throw DomainError("k-means needs at least K points");
  if (options.restarts < 1) throw DomainError("k-means needs at least one restart");

  ClusterResult best;
  bool have_best = false;
  for (int r = 0; r < options.restarts; ++r) {
    const std::uint64_t seed = derive_seed(options.seed, {static_cast<std::uint64_t>(r)});
    Rng rng(seed);
    const auto picks = rng.sample_without_replacement(n, options.k);
    Eigen::MatrixXd init(static_cast<Eigen::Index>(options.k), points.cols());
    for (std::size_t j = 0; j < picks.size(); ++j) {
      init.row(static_cast<Eigen::Index>(j)) = points.row(static_cast<Eigen::Index>(picks[j]));
    }
    ClusterResult run = lloyd(points, std::move(init), options.max_iter);
    run.seed = seed;
    if (!have_best || run.squared_error < best.squared_error) {
      best = std::move(run);
      have_best = true;
    }
  }
  return best;
}

Eigen::VectorXd cluster_widths(const Eigen::MatrixXd& points,
                               std::span<const std::size_t> assignments,
                               const Eigen::MatrixXd& centers, Eigen::Index dims, double floor) {
  check_assignments(points, centers, assignments);
  if (dims < 1 || dims > centers.cols()) throw DomainError("width subspace dimension out of range");
  if (!(floor > 0.0)) throw DomainError("width floor must be positive");
  const Eigen::Index k = centers.rows();
  Eigen::VectorXd sums = Eigen::VectorXd::Zero(k);
  std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
  for (Eigen::Index u = 0; u < points.rows(); ++u) {
    const auto j = static_cast<Eigen::Index>(assignments[static_cast<std::size_t>(u)]);
    sums[j] += (points.row(u).head(dims) - centers.row(j).head(dims)).norm();
    ++counts[static_cast<std::size_t>(j)];
  }
  Eigen::VectorXd widths(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const auto count = counts[static_cast<std::size_t>(j)];
    if (count == 0) throw DomainError("cannot compute the width of an empty cluster");
    const double mean = sums[j] / static_cast<double>(count);
    widths[j] = (count == 1 || mean < floor) ? floor : mean;
  }
  return widths;
}

}  // namespace micropump
