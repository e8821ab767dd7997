#include "micropump/training.hpp"

#include <cmath>
#include <limits>

#include "micropump/errors.hpp"

namespace micropump {
namespace {

void check_data(const RbfModel& model, const Eigen::MatrixXd& rows, const Eigen::VectorXd& targets) {
  model.validate();
  if (rows.rows() != targets.size()) throw DomainError("features and targets differ in length");
  if (rows.rows() > 0 && rows.cols() != model.input_dim()) {
    throw DomainError("feature rows do not match the model input dimension");
  }
}

Eigen::VectorXd flatten(const Eigen::MatrixXd& m) {
  return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
}

Eigen::MatrixXd unflatten(const Eigen::VectorXd& v, Eigen::Index rows, Eigen::Index cols) {
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), rows, cols);
}

double loss_of(const Eigen::MatrixXd& v, const Eigen::VectorXd& w, const Eigen::VectorXd& y) {
  if (v.rows() == 0) return 0.0;
  return (v * w - y).squaredNorm();
}

// Widths from the current centers: each training row joins its nearest
// center. A center that attracts no rows keeps its previous width.
Eigen::VectorXd refresh_widths(const Eigen::MatrixXd& standardized, const Eigen::MatrixXd& centers,
                               const Eigen::VectorXd& previous, double floor) {
  const Eigen::Index k = centers.rows();
  Eigen::VectorXd sums = Eigen::VectorXd::Zero(k);
  std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
  for (Eigen::Index u = 0; u < standardized.rows(); ++u) {
    const auto j = static_cast<Eigen::Index>(nearest_center(standardized.row(u).transpose(), centers));
    sums[j] += (standardized.row(u) - centers.row(j)).norm();
    ++counts[static_cast<std::size_t>(j)];
  }
  Eigen::VectorXd widths = previous;
  for (Eigen::Index j = 0; j < k; ++j) {
    const auto count = counts[static_cast<std::size_t>(j)];
    if (count == 0) continue;
    const double mean = sums[j] / static_cast<double>(count);
    widths[j] = (count == 1 || mean < floor) ? floor : mean;
  }
  return widths;
}

class Tracker {
 public:
  Tracker(TrainReport& report, int patience) : report_(report), patience_(patience) {}

  // Returns true when training should stop for lack of progress.
  bool record(int epoch, double train_loss, double validation_loss, const RbfModel& model) {
    if (!std::isfinite(train_loss) || !std::isfinite(validation_loss)) {
      throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + " (train " +
                              std::to_string(train_loss) + ", validation " +
                              std::to_string(validation_loss) + ")",
                          epoch);
    }
    report_.train_loss.push_back(train_loss);
    report_.validation_loss.push_back(validation_loss);
    report_.epochs_run = epoch;
    if (epoch == 0 || validation_loss < best_) {
      best_ = validation_loss;
      report_.best_epoch = epoch;
      report_.model = model;
      stagnant_ = 0;
      return false;
    }
    return ++stagnant_ >= patience_;
  }

 private:
  TrainReport& report_;
  int patience_;
  int stagnant_ = 0;
  double best_ = std::numeric_limits<double>::infinity();
};

TrainReport train_weights(const RbfModel& initial, const Split& train_split,
                          const Split& validation_split, const TrainConfig& config) {
  TrainReport report;
  Tracker tracker(report, config.patience);
  RbfModel model = initial;

  const Eigen::MatrixXd vt = design_matrix(model, train_split.features);
  const Eigen::MatrixXd vv = design_matrix(model, validation_split.features);
  const Eigen::VectorXd& yt = train_split.targets;
  const Eigen::VectorXd& yv = validation_split.targets;
  const double scale = 1.0 + 2.0 * (vt.transpose() * yt).lpNorm<Eigen::Infinity>();

  Eigen::VectorXd w = model.output_layer();
  tracker.record(0, loss_of(vt, w, yt), loss_of(vv, w, yv), model);

  Adam adam(config, w.size());
  report.stop_reason = "epoch_limit";
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const Eigen::VectorXd grad = 2.0 * vt.transpose() * (vt * w - yt);
    if (grad.lpNorm<Eigen::Infinity>() <= config.stationarity_tolerance * scale) {
      report.converged = true;
      report.stop_reason = "stationary";
      break;
    }
    adam.step(w, grad);
    model.set_output_layer(w);
    if (tracker.record(epoch, loss_of(vt, w, yt), loss_of(vv, w, yv), model)) {
      report.converged = true;
      report.stop_reason = "early_stop";
      break;
    }
  }
  return report;
}

TrainReport train_centers(const RbfModel& initial, const Split& train_split,
                          const Split& validation_split, const TrainConfig& config) {
  TrainReport report;
  Tracker tracker(report, config.patience);
  RbfModel model = initial;

  const Eigen::MatrixXd xt = model.scaler.transform_rows(train_split.features);
  const Eigen::MatrixXd xv = validation_split.size() > 0
                                 ? model.scaler.transform_rows(validation_split.features)
                                 : Eigen::MatrixXd(0, model.input_dim());
  const Eigen::VectorXd& yt = train_split.targets;
  const Eigen::VectorXd& yv = validation_split.targets;

  auto evaluate = [&](const RbfModel& m) {
    const Eigen::VectorXd w = m.output_layer();
    return std::pair{loss_of(activation_matrix(m.centers, m.widths, xt), w, yt),
                     loss_of(activation_matrix(m.centers, m.widths, xv), w, yv)};
  };

  {
    const auto [lt, lv] = evaluate(model);
    tracker.record(0, lt, lv, model);
  }

  const Eigen::Index k = model.hidden_count();
  const Eigen::Index m = model.input_dim();
  Adam adam(config, k * m);
  Eigen::VectorXd params = flatten(model.centers);
  report.stop_reason = "epoch_limit";
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const Eigen::MatrixXd grad = grad_centers(model, train_split.features, yt);
    adam.step(params, flatten(grad));
    model.centers = unflatten(params, k, m);
    model.widths = refresh_widths(xt, model.centers, model.widths, config.width_floor);
    model.set_output_layer(solve_least_squares(activation_matrix(model.centers, model.widths, xt), yt));
    const auto [lt, lv] = evaluate(model);
    if (tracker.record(epoch, lt, lv, model)) {
      report.converged = true;
      report.stop_reason = "early_stop";
      break;
    }
  }
  return report;
}

}  // namespace

std::string_view to_string(TrainMode mode) noexcept {
  return mode == TrainMode::kCenters ? "centers" : "weights_bias";
}

TrainMode parse_train_mode(std::string_view text) {
  if (text == "weights_bias" || text == "weights") return TrainMode::kWeightsBias;
  if (text == "centers") return TrainMode::kCenters;
  throw DomainError("unknown training mode '" + std::string(text) + "'");
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw DomainError("learning rate must be positive");
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
    throw DomainError("Adam moment decays must lie in (0, 1)");
  }
  if (!(epsilon > 0.0)) throw DomainError("Adam epsilon must be positive");
  if (epochs < 1) throw DomainError("epochs must be at least 1");
  if (patience < 1) throw DomainError("patience must be at least 1");
  if (!(width_floor > 0.0)) throw DomainError("width floor must be positive");
  if (!(stationarity_tolerance >= 0.0)) throw DomainError("stationarity tolerance must be >= 0");
}

Adam::Adam(const TrainConfig& config, Eigen::Index parameter_count)
    : lr_(config.learning_rate),
      beta1_(config.beta1),
      beta2_(config.beta2),
      eps_(config.epsilon),
      m_(Eigen::VectorXd::Zero(parameter_count)),
      v_(Eigen::VectorXd::Zero(parameter_count)) {}

void Adam::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
  if (params.size() != m_.size() || grad.size() != m_.size()) {
    throw DomainError("Adam parameter count changed between steps");
  }
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(beta1_, t_);
  const double c2 = 1.0 - std::pow(beta2_, t_);
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
  }
}

double sse_loss(const Eigen::VectorXd& predictions, const Eigen::VectorXd& truths) {
  if (predictions.size() != truths.size()) throw DomainError("predictions and truths differ in length");
  if (predictions.size() == 0) throw DomainError("loss needs at least one sample");
  return (predictions - truths).squaredNorm();
}

Eigen::VectorXd grad_weights(const RbfModel& model, const Eigen::MatrixXd& rows,
                             const Eigen::VectorXd& targets) {
  check_data(model, rows, targets);
  const Eigen::MatrixXd v = design_matrix(model, rows);
  return 2.0 * v.transpose() * (v * model.output_layer() - targets);
}

Eigen::MatrixXd grad_centers(const RbfModel& model, const Eigen::MatrixXd& rows,
                             const Eigen::VectorXd& targets) {
  check_data(model, rows, targets);
  const Eigen::Index k = model.hidden_count();
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(k, model.input_dim());
  if (rows.rows() == 0) return grad;
  const Eigen::MatrixXd z = model.scaler.transform_rows(rows);
  const Eigen::MatrixXd v = activation_matrix(model.centers, model.widths, z);
  const Eigen::VectorXd residual = v * model.output_layer() - targets;
  for (Eigen::Index u = 0; u < z.rows(); ++u) {
    for (Eigen::Index j = 0; j < k; ++j) {
      const double coeff = 2.0 * residual[u] * model.weights[j] * v(u, j) /
                           (model.widths[j] * model.widths[j]);
      grad.row(j) += coeff * (z.row(u) - model.centers.row(j));
    }
  }
  return grad;
}

Eigen::VectorXd solve_least_squares(const Eigen::MatrixXd& v, const Eigen::VectorXd& y) {
  if (v.rows() != y.size()) throw DomainError("design matrix and targets differ in length");
  if (v.rows() < 1) throw DomainError("least squares needs at least one row");
  if (!v.allFinite() || !y.allFinite()) throw DomainError("least squares input must be finite");
  const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(v);
  Eigen::VectorXd w = cod.solve(y);
  if (!w.allFinite()) throw DomainError("least squares produced a non-finite solution");
  return w;
}

double normal_residual(const Eigen::MatrixXd& v, const Eigen::VectorXd& w, const Eigen::VectorXd& y) {
  return (v.transpose() * (v * w - y)).lpNorm<Eigen::Infinity>();
}

bool satisfies_normal_equations(const Eigen::MatrixXd& v, const Eigen::VectorXd& w,
                                const Eigen::VectorXd& y, double tolerance) {
  const double bound = tolerance * (1.0 + (v.transpose() * y).lpNorm<Eigen::Infinity>());
  return normal_residual(v, w, y) < bound;
}

RbfModel fit_output_layer(RbfModel model, const Split& data) {
  check_data(model, data.features, data.targets);
  model.set_output_layer(solve_least_squares(design_matrix(model, data.features), data.targets));
  model.metadata.mode = "least_squares";
  model.metadata.final_loss = loss_of(design_matrix(model, data.features), model.output_layer(), data.targets);
  return model;
}

RbfModel initialize_from_clusters(const ClusterResult& clusters, const Eigen::MatrixXd& joint_points,
                                  const FeatureScaler& scaler, const Split& train,
                                  double width_floor) {
  const Eigen::Index m = scaler.dim();
  if (clusters.centers.cols() < m) throw DomainError("cluster centers are narrower than the feature space");
  RbfModel model;
  model.scaler = scaler;
  model.centers = clusters.centers.leftCols(m);
  model.widths = cluster_widths(joint_points, clusters.assignments, clusters.centers, m, width_floor);
  model.weights = Eigen::VectorXd::Zero(model.centers.rows());
  model.bias = 0.0;
  return fit_output_layer(std::move(model), train);
}

TrainReport train(const RbfModel& initial, const Split& train_split, const Split& validation_split,
                  const TrainConfig& config) {
  config.validate();
  check_data(initial, train_split.features, train_split.targets);
  check_data(initial, validation_split.features, validation_split.targets);
  if (train_split.size() < 1) throw DomainError("training split is empty");

  TrainReport report = config.mode == TrainMode::kCenters
                           ? train_centers(initial, train_split, validation_split, config)
                           : train_weights(initial, train_split, validation_split, config);
  report.model.metadata.mode = std::string(to_string(config.mode));
  report.model.metadata.seed = config.seed;
  report.model.metadata.epochs = report.epochs_run;
  report.model.metadata.final_loss = report.train_loss[static_cast<std::size_t>(report.best_epoch)];
  return report;
}

}  // namespace micropump
