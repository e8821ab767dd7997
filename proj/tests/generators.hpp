#pragma once

// Seeded random instances for property tests.

#include <cstdint>

#include <Eigen/Dense>

#include "micropump/random.hpp"
#include "micropump/rbf.hpp"

namespace micropump::testing {

inline Eigen::MatrixXd uniform_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double lo, double hi) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.uniform(lo, hi);
  }
  return m;
}

inline Eigen::VectorXd uniform_vector(Rng& rng, Eigen::Index n, double lo, double hi) {
  return uniform_matrix(rng, n, 1, lo, hi).col(0);
}

inline Eigen::MatrixXd normal_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.normal();
  }
  return m;
}

// Model over raw features with a non-trivial scaler, centers near the data
// and widths large enough that every unit contributes.
inline RbfModel random_model(Rng& rng, Eigen::Index k, Eigen::Index m) {
  RbfModel model;
  model.scaler = FeatureScaler(uniform_vector(rng, m, -5.0, 5.0), uniform_vector(rng, m, 0.5, 3.0));
  model.centers = uniform_matrix(rng, k, m, -1.5, 1.5);
  model.widths = uniform_vector(rng, k, 0.7, 2.0);
  model.weights = uniform_vector(rng, k, -10.0, 10.0);
  model.bias = rng.uniform(-5.0, 5.0);
  return model;
}

// Raw rows whose standardized values are roughly standard normal under
// `model.scaler`.
inline Eigen::MatrixXd random_rows(Rng& rng, const RbfModel& model, Eigen::Index n) {
  return model.scaler.inverse_transform_rows(normal_matrix(rng, n, model.input_dim()));
}

}  // namespace micropump::testing
