#pragma once

// Gaussian radial-basis-function regression network with a single output.
//
//   y(x) = sum_j w_j exp(-|z(x) - c_j|^2 / (2 sigma_j^2)) + beta
//
// where z(x) is the z-scored input. Centers live in the standardized space;
// use FeatureScaler::inverse_transform to report them in raw units.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace micropump {

class FeatureScaler {
 public:
  FeatureScaler() = default;
  FeatureScaler(Eigen::VectorXd means, Eigen::VectorXd sds);

  // Population mean and standard deviation per column of `rows`
  // (one sample per row). A constant column raises CalibrationError naming
  // the column, taken from `names` when provided.
  static FeatureScaler fit(const Eigen::MatrixXd& rows,
                           std::span<const std::string_view> names = {});
  // Pass-through scaler used when standardization is switched off.
  static FeatureScaler identity(Eigen::Index dim);

  Eigen::Index dim() const noexcept { return means_.size(); }
  const Eigen::VectorXd& means() const noexcept { return means_; }
  const Eigen::VectorXd& sds() const noexcept { return sds_; }

  Eigen::VectorXd transform(const Eigen::VectorXd& x) const;
  Eigen::VectorXd inverse_transform(const Eigen::VectorXd& z) const;
  Eigen::MatrixXd transform_rows(const Eigen::MatrixXd& rows) const;
  Eigen::MatrixXd inverse_transform_rows(const Eigen::MatrixXd& rows) const;

 private:
  Eigen::VectorXd means_;
  Eigen::VectorXd sds_;
};

struct ModelMetadata {
  std::string mode = "least_squares";
  std::uint64_t seed = 0;
  int epochs = 0;
  double final_loss = 0.0;
};

struct RbfModel {
  FeatureScaler scaler;
  Eigen::MatrixXd centers;  // K x M, standardized space
  Eigen::VectorXd widths;   // K
  Eigen::VectorXd weights;  // K
  double bias = 0.0;
  ModelMetadata metadata;

  Eigen::Index input_dim() const noexcept { return centers.cols(); }
  Eigen::Index hidden_count() const noexcept { return centers.rows(); }

  // Throws DomainError when shapes disagree, K < 1 or a width is not positive.
  void validate() const;

  // Weights followed by the bias, the column W of V * W.
  Eigen::VectorXd output_layer() const;
  void set_output_layer(const Eigen::VectorXd& stacked);
};

double kernel(double distance, double width);

double forward(const RbfModel& model, const Eigen::VectorXd& x);
// One prediction per row of `rows` (raw units).
Eigen::VectorXd predict(const RbfModel& model, const Eigen::MatrixXd& rows);

// N x (K + 1): kernel activations of each row against each center, then a
// column of ones for the bias.
Eigen::MatrixXd design_matrix(const RbfModel& model, const Eigen::MatrixXd& rows);
// Same, for rows that are already standardized.
Eigen::MatrixXd activation_matrix(const Eigen::MatrixXd& centers, const Eigen::VectorXd& widths,
                                  const Eigen::MatrixXd& standardized_rows);

inline constexpr int kModelFormatVersion = 1;

std::string serialize_model(const RbfModel& model);
RbfModel parse_model(std::string_view text);
void save_model(const RbfModel& model, const std::filesystem::path& path);
RbfModel load_model(const std::filesystem::path& path);

}  // namespace micropump
