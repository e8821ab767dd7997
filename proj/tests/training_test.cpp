#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "generators.hpp"
#include "oracles.hpp"
#include "micropump/errors.hpp"
#include "micropump/training.hpp"

using namespace micropump;
using namespace micropump::testing;

namespace {

double loss_at(const RbfModel& model, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  return sse_loss(predict(model, x), y);
}

double relative_error(const Eigen::VectorXd& analytic, const Eigen::VectorXd& numeric) {
  return (analytic - numeric).norm() / std::max(numeric.norm(), 1e-12);
}

struct Instance {
  RbfModel model;
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
};

Instance random_instance(Rng& rng, Eigen::Index max_k = 8, Eigen::Index max_n = 50) {
  Instance in;
  in.model = random_model(rng, static_cast<Eigen::Index>(1 + rng.index(static_cast<std::size_t>(max_k))), 4);
  const auto n = static_cast<Eigen::Index>(5 + rng.index(static_cast<std::size_t>(max_n - 4)));
  in.x = random_rows(rng, in.model, n);
  in.y = uniform_vector(rng, n, 5.0, 45.0);
  return in;
}

TrainConfig config_for(TrainMode mode) {
  TrainConfig c;
  c.mode = mode;
  c.seed = 5;
  return c;
}

}  // namespace

TEST(SseLoss, Examples) {
  const Eigen::Vector3d a(1, 2, 3);
  EXPECT_EQ(sse_loss(a, a), 0.0);
  EXPECT_EQ(sse_loss(Eigen::VectorXd::Constant(1, 3.0), Eigen::VectorXd::Constant(1, 1.0)), 4.0);
  EXPECT_THROW(sse_loss(a, Eigen::Vector2d(1, 2)), DomainError);
  EXPECT_THROW(sse_loss(Eigen::VectorXd(0), Eigen::VectorXd(0)), DomainError);
}

TEST(SseLoss, MatchesLoopResummation) {
  Rng rng(51);
  for (int t = 0; t < 50; ++t) {
    const Eigen::VectorXd p = uniform_vector(rng, 40, -10, 10);
    const Eigen::VectorXd q = uniform_vector(rng, 40, -10, 10);
    double expected = 0.0;
    for (Eigen::Index i = 0; i < 40; ++i) expected += (p[i] - q[i]) * (p[i] - q[i]);
    EXPECT_NEAR(sse_loss(p, q), expected, 1e-12 * expected);
  }
}

TEST(GradWeights, MatchesCentralDifferences) {
  Rng rng(52);
  const double h = 1e-6;
  for (int t = 0; t < 100; ++t) {
    const Instance in = random_instance(rng);
    const Eigen::VectorXd analytic = grad_weights(in.model, in.x, in.y);
    Eigen::VectorXd numeric(analytic.size());
    for (Eigen::Index i = 0; i < analytic.size(); ++i) {
      RbfModel plus = in.model;
      RbfModel minus = in.model;
      Eigen::VectorXd wp = plus.output_layer();
      Eigen::VectorXd wm = minus.output_layer();
      wp[i] += h;
      wm[i] -= h;
      plus.set_output_layer(wp);
      minus.set_output_layer(wm);
      numeric[i] = (loss_at(plus, in.x, in.y) - loss_at(minus, in.x, in.y)) / (2.0 * h);
    }
    EXPECT_LT(relative_error(analytic, numeric), 1e-5) << "instance " << t;
  }
}

TEST(GradCenters, MatchesCentralDifferences) {
  Rng rng(53);
  const double h = 1e-6;
  for (int t = 0; t < 100; ++t) {
    const Instance in = random_instance(rng);
    const Eigen::MatrixXd analytic = grad_centers(in.model, in.x, in.y);
    Eigen::MatrixXd numeric(analytic.rows(), analytic.cols());
    for (Eigen::Index j = 0; j < analytic.rows(); ++j) {
      for (Eigen::Index c = 0; c < analytic.cols(); ++c) {
        RbfModel plus = in.model;
        RbfModel minus = in.model;
        plus.centers(j, c) += h;
        minus.centers(j, c) -= h;
        numeric(j, c) = (loss_at(plus, in.x, in.y) - loss_at(minus, in.x, in.y)) / (2.0 * h);
      }
    }
    const Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(analytic.data(), analytic.size());
    const Eigen::VectorXd n = Eigen::Map<const Eigen::VectorXd>(numeric.data(), numeric.size());
    EXPECT_LT(relative_error(a, n), 1e-5) << "instance " << t;
  }
}

TEST(Gradients, ZeroCases) {
  Rng rng(54);
  Instance in = random_instance(rng);
  in.y = predict(in.model, in.x);
  EXPECT_LT(grad_weights(in.model, in.x, in.y).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT(grad_centers(in.model, in.x, in.y).cwiseAbs().maxCoeff(), 1e-9);

  Instance dead = random_instance(rng);
  dead.model.weights[0] = 0.0;
  EXPECT_EQ(grad_centers(dead.model, dead.x, dead.y).row(0).cwiseAbs().maxCoeff(), 0.0);

  Instance at_center = random_instance(rng);
  const Eigen::VectorXd c0 = at_center.model.scaler.inverse_transform(at_center.model.centers.row(0).transpose());
  at_center.x = c0.transpose().replicate(6, 1);
  at_center.y = Eigen::VectorXd::Constant(6, 30.0);
  EXPECT_LT(grad_centers(at_center.model, at_center.x, at_center.y).row(0).cwiseAbs().maxCoeff(), 1e-12);

  const Eigen::VectorXd g = grad_weights(in.model, in.x, Eigen::VectorXd::Zero(in.x.rows()));
  EXPECT_NEAR(g[g.size() - 1], 2.0 * predict(in.model, in.x).sum(), 1e-9 * (1.0 + std::abs(g[g.size() - 1])));
}

TEST(LeastSquares, Examples) {
  const Eigen::VectorXd w = solve_least_squares(Eigen::Matrix2d::Identity(), Eigen::Vector2d(3, 5));
  EXPECT_NEAR(w[0], 3.0, 1e-15);
  EXPECT_NEAR(w[1], 5.0, 1e-15);
  const Eigen::VectorXd avg = solve_least_squares(Eigen::Vector2d(1, 1), Eigen::Vector2d(2, 4));
  EXPECT_NEAR(avg[0], 3.0, 1e-15);
  Eigen::MatrixXd bad = Eigen::MatrixXd::Identity(2, 2);
  bad(0, 1) = std::nan("");
  EXPECT_THROW(solve_least_squares(bad, Eigen::Vector2d(1, 1)), DomainError);
}

TEST(LeastSquares, MatchesPseudoInverseOnWellConditioned) {
  Rng rng(55);
  for (int t = 0; t < 100; ++t) {
    const auto cols = static_cast<Eigen::Index>(2 + rng.index(8));
    const auto rows = cols + static_cast<Eigen::Index>(rng.index(40));
    const Eigen::MatrixXd v = normal_matrix(rng, rows, cols);
    const Eigen::VectorXd y = uniform_vector(rng, rows, -20.0, 20.0);
    const Eigen::VectorXd w = solve_least_squares(v, y);
    const Eigen::VectorXd oracle = pseudo_inverse(v) * y;
    EXPECT_LT((w - oracle).cwiseAbs().maxCoeff(), 1e-8) << "instance " << t;
    EXPECT_TRUE(satisfies_normal_equations(v, w, y));
  }
}

TEST(LeastSquares, RankDeficientGivesMinimumNorm) {
  Rng rng(56);
  for (int t = 0; t < 100; ++t) {
    const auto rank = static_cast<Eigen::Index>(1 + rng.index(4));
    const auto cols = rank + static_cast<Eigen::Index>(1 + rng.index(4));
    const auto rows = cols + static_cast<Eigen::Index>(rng.index(20));
    const Eigen::MatrixXd v = normal_matrix(rng, rows, rank) * normal_matrix(rng, rank, cols);
    const Eigen::VectorXd y = uniform_vector(rng, rows, -20.0, 20.0);
    const Eigen::VectorXd w = solve_least_squares(v, y);
    EXPECT_TRUE(satisfies_normal_equations(v, w, y)) << "residual " << normal_residual(v, w, y);
    const Eigen::VectorXd oracle = pseudo_inverse(v) * y;
    EXPECT_NEAR(w.norm(), oracle.norm(), 1e-6 * (1.0 + oracle.norm()));
  }
}

TEST(Training, SelfConsistencyRecovery) {
  Rng rng(57);
  for (int t = 0; t < 10; ++t) {
    RbfModel truth = random_model(rng, 5, 4);
    const Eigen::MatrixXd x = random_rows(rng, truth, 200);
    const Eigen::MatrixXd xv = random_rows(rng, truth, 50);
    const Split train_split{x, predict(truth, x)};
    const Split validation{xv, predict(truth, xv)};
    RbfModel start = truth;
    start.weights.setZero();
    start.bias = 0.0;
    start = fit_output_layer(start, train_split);
    const TrainReport report = train(start, train_split, validation, config_for(TrainMode::kWeightsBias));
    EXPECT_LT(loss_at(report.model, x, train_split.targets), 1e-6);
  }
}

TEST(Training, WeightsModeNeverWorseThanLeastSquares) {
  Rng rng(58);
  for (int t = 0; t < 30; ++t) {
    const Instance in = random_instance(rng);
    const Instance val = {in.model, random_rows(rng, in.model, 20), uniform_vector(rng, 20, 5.0, 45.0)};
    const Split train_split{in.x, in.y};
    const RbfModel init = fit_output_layer(in.model, train_split);
    const double ls = loss_at(init, in.x, in.y);
    const TrainReport report = train(init, train_split, {val.x, val.y}, config_for(TrainMode::kWeightsBias));
    EXPECT_LE(report.model.metadata.final_loss, ls + 1e-9);
    EXPECT_LE(loss_at(report.model, in.x, in.y), ls + 1e-9);
    EXPECT_EQ(report.model.centers, init.centers);
    EXPECT_EQ(report.model.widths, init.widths);
  }
}

TEST(Training, AdamReachesLeastSquaresOptimum) {
  Rng rng(59);
  for (int t = 0; t < 10; ++t) {
    Instance in = random_instance(rng, 4, 30);
    const Split train_split{in.x, in.y};
    const double ls = loss_at(fit_output_layer(in.model, train_split), in.x, in.y);
    TrainConfig c = config_for(TrainMode::kWeightsBias);
    c.epochs = 200000;
    c.patience = 200000;
    c.learning_rate = 0.05;
    // Validation equal to training, so the best model is the lowest training loss.
    const TrainReport report = train(in.model, train_split, train_split, c);
    EXPECT_LT(loss_at(report.model, in.x, in.y) - ls, 1e-6 * (1.0 + ls)) << "instance " << t;
  }
}

TEST(Training, CentersModeKeepsOutputLayerAtLeastSquares) {
  Rng rng(60);
  for (int t = 0; t < 10; ++t) {
    const Instance in = random_instance(rng, 6, 50);
    const Split train_split{in.x, in.y};
    const RbfModel init = fit_output_layer(in.model, train_split);
    TrainConfig c = config_for(TrainMode::kCenters);
    c.epochs = 40;
    const TrainReport report = train(init, train_split, {in.x.topRows(5), in.y.head(5)}, c);
    const Eigen::MatrixXd v = design_matrix(report.model, in.x);
    EXPECT_TRUE(satisfies_normal_equations(v, report.model.output_layer(), in.y))
        << "residual " << normal_residual(v, report.model.output_layer(), in.y);
    for (Eigen::Index j = 0; j < report.model.widths.size(); ++j) {
      EXPECT_GE(report.model.widths[j], kDefaultWidthFloor);
    }
  }
}

TEST(Training, ReportsBestValidationEpoch) {
  Rng rng(61);
  for (const auto mode : {TrainMode::kWeightsBias, TrainMode::kCenters}) {
    const Instance in = random_instance(rng);
    const Split train_split{in.x, in.y};
    const Split validation{random_rows(rng, in.model, 15), uniform_vector(rng, 15, 5.0, 45.0)};
    const TrainReport report = train(fit_output_layer(in.model, train_split), train_split, validation, config_for(mode));
    ASSERT_EQ(report.train_loss.size(), report.validation_loss.size());
    const auto best = std::min_element(report.validation_loss.begin(), report.validation_loss.end());
    EXPECT_EQ(report.best_epoch, static_cast<int>(best - report.validation_loss.begin()));
    EXPECT_NEAR(sse_loss(predict(report.model, validation.features), validation.targets), *best, 1e-9 * (1.0 + *best));
    for (double l : report.train_loss) EXPECT_TRUE(std::isfinite(l));
    EXPECT_EQ(report.model.metadata.mode, to_string(mode));
  }
}

TEST(Training, Deterministic) {
  Rng rng(62);
  const Instance in = random_instance(rng);
  const Split train_split{in.x, in.y};
  const RbfModel init = fit_output_layer(in.model, train_split);
  for (const auto mode : {TrainMode::kWeightsBias, TrainMode::kCenters}) {
    const TrainReport a = train(init, train_split, train_split, config_for(mode));
    const TrainReport b = train(init, train_split, train_split, config_for(mode));
    EXPECT_EQ(serialize_model(a.model), serialize_model(b.model));
    EXPECT_EQ(a.train_loss, b.train_loss);
  }
}

TEST(Training, NonFiniteLossAborts) {
  Rng rng(63);
  Instance in = random_instance(rng);
  in.y[0] = std::nan("");
  EXPECT_THROW(train(in.model, {in.x, in.y}, {in.x, in.y}, config_for(TrainMode::kWeightsBias)), TrainingError);
  EXPECT_THROW(train(in.model, {in.x, in.y}, {in.x, in.y}, config_for(TrainMode::kCenters)), TrainingError);
}

TEST(TrainConfig, Validation) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  c.learning_rate = 0.0;
  EXPECT_THROW(c.validate(), DomainError);
  c = {};
  c.beta1 = 1.0;
  EXPECT_THROW(c.validate(), DomainError);
  c = {};
  c.epochs = 0;
  EXPECT_THROW(c.validate(), DomainError);
  EXPECT_EQ(parse_train_mode("weights"), TrainMode::kWeightsBias);
  EXPECT_EQ(parse_train_mode("centers"), TrainMode::kCenters);
  EXPECT_THROW(parse_train_mode("both"), DomainError);
}
