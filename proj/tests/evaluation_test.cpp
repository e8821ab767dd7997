#include <gtest/gtest.h>

#include <cmath>

#include <fmt/format.h>

#include "micropump/clustering.hpp"
#include "micropump/errors.hpp"
#include "micropump/evaluation.hpp"

using namespace micropump;

namespace {

struct Fixture {
  PlantModel plant;
  Dataset data;
  ClusterModel clusters;
};

Fixture make_fixture(std::size_t k = 4) {
  Fixture f;
  f.plant.seed = 3;
  GridConfig grid;
  grid.train_count = 80;
  grid.validation_count = 10;
  grid.test_count = 40;
  f.data = generate_dataset(f.plant, grid, 9);
  Eigen::MatrixXd joint(static_cast<Eigen::Index>(f.data.train.size()), 5);
  joint << feature_rows(f.data.train), label_vector(f.data.train);
  const FeatureScaler scaler = FeatureScaler::fit(joint);
  const ClusterResult r = kmeans(scaler.transform_rows(joint), {k, 5, 300, 4});
  f.clusters = make_cluster_model(r, scaler);
  return f;
}

RbfModel constant_model(const ClusterModel& clusters, double angle) {
  RbfModel m;
  m.scaler = clusters.feature_scaler();
  m.centers = Eigen::MatrixXd::Zero(1, 4);
  m.widths = Eigen::VectorXd::Ones(1);
  m.weights = Eigen::VectorXd::Zero(1);
  m.bias = angle;
  return m;
}

}  // namespace

TEST(Evaluate, StrategiesMatchIndependentResummation) {
  const Fixture f = make_fixture();
  const RbfModel w = constant_model(f.clusters, 28.0);
  const RbfModel c = constant_model(f.clusters, 60.0);  // clamped to 45
  EvaluationInputs inputs;
  inputs.weights_model = &w;
  inputs.centers_model = &c;
  const ClusterReport report = evaluate(f.data.test, f.plant, f.clusters, inputs);
  ASSERT_EQ(report.rows.size(), 4u);

  std::size_t total = 0;
  for (const auto& row : report.rows) {
    double none = 0.0, fixed = 0.0, weights = 0.0, centers = 0.0, label = 0.0;
    std::size_t n = 0;
    for (const auto& lp : f.data.test) {
      if (f.clusters.assign(lp) != row.cluster) continue;
      none += simulate_pulse(f.plant, lp.point, 0.0, 1);
      fixed += simulate_pulse(f.plant, lp.point, 30.0, 1);
      weights += simulate_pulse(f.plant, lp.point, 28.0, 1);
      centers += simulate_pulse(f.plant, lp.point, 45.0, 1);
      label += lp.optimal_angle_deg;
      ++n;
    }
    ASSERT_EQ(row.count, n);
    total += n;
    if (n == 0) continue;
    EXPECT_NEAR(*row.drop[0], none / n, 1e-12);
    EXPECT_NEAR(*row.drop[1], fixed / n, 1e-12);
    EXPECT_NEAR(*row.drop[2], weights / n, 1e-12);
    EXPECT_NEAR(*row.drop[3], centers / n, 1e-12);
    EXPECT_NEAR(*row.label_angle, label / n, 1e-12);
    EXPECT_EQ(*row.angle[2], 28.0);
    EXPECT_EQ(*row.angle[3], 45.0);
    for (const auto& d : row.drop) EXPECT_GE(*d, 0.0);
  }
  EXPECT_EQ(total, f.data.test.size());
}

TEST(Evaluate, TunedAnglesLandInResidualBand) {
  Fixture f = make_fixture();
  // Per-point measurements at the latent optimum average into the floor band.
  for (std::size_t c = 0; c < f.clusters.k(); ++c) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& lp : f.data.test) {
      if (f.clusters.assign(lp) != c) continue;
      sum += simulate_pulse(f.plant, lp.point, latent_optimal_angle(f.plant, lp.point), 1);
      ++n;
    }
    if (n == 0) continue;
    const double slack = 4.0 * f.plant.noise_sd / std::sqrt(static_cast<double>(n)) + 1e-3;
    EXPECT_GE(sum / n, f.plant.residual_lo - slack);
    EXPECT_LE(sum / n, f.plant.residual_hi + slack);
  }
}

TEST(Evaluate, EmptyClusterHasNoData) {
  Fixture f = make_fixture();
  // A center far from every point never wins an assignment.
  Eigen::MatrixXd centers(f.clusters.centers.rows() + 1, f.clusters.centers.cols());
  centers << f.clusters.centers, Eigen::RowVectorXd::Constant(f.clusters.centers.cols(), 1e3);
  f.clusters.centers = centers;
  const ClusterReport report = evaluate(f.data.test, f.plant, f.clusters, {});
  const auto& last = report.rows.back();
  EXPECT_EQ(last.count, 0u);
  EXPECT_FALSE(last.drop[0].has_value());
  EXPECT_FALSE(last.label_angle.has_value());
  EXPECT_FALSE(report.rows.front().drop[2].has_value());
  const std::string text = render_report_text(report);
  EXPECT_NE(text.find("no data"), std::string::npos);
  const std::string csv = render_drops_csv(report);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "cluster,count,none,fixed,weights_bias,centers");
  EXPECT_NE(csv.find("\n5,0,,,,\n"), std::string::npos);
}

TEST(Evaluate, RejectsBadFixedAngle) {
  const Fixture f = make_fixture();
  EvaluationInputs inputs;
  inputs.fixed_angle = 50.0;
  EXPECT_THROW(evaluate(f.data.test, f.plant, f.clusters, inputs), DomainError);
}

TEST(Evaluate, TextTableUsesFourDecimals) {
  const Fixture f = make_fixture();
  const ClusterReport report = evaluate(f.data.test, f.plant, f.clusters, {});
  const std::string text = render_report_text(report);
  EXPECT_NE(text.find(fmt::format("{:.4f}", *report.rows[0].drop[0])), std::string::npos);
}

TEST(ClusterFile, RoundTripAndAssignments) {
  const Fixture f = make_fixture();
  const ClusterModel back = parse_cluster_model(serialize_cluster_model(f.clusters));
  EXPECT_EQ(back.centers, f.clusters.centers);
  EXPECT_EQ(back.joint_scaler.means(), f.clusters.joint_scaler.means());
  EXPECT_EQ(back.joint_scaler.sds(), f.clusters.joint_scaler.sds());
  EXPECT_EQ(back.sizes, f.clusters.sizes);
  EXPECT_EQ(back.converged, f.clusters.converged);
  for (const auto& lp : f.data.test) EXPECT_EQ(back.assign(lp), f.clusters.assign(lp));
  const Eigen::MatrixXd raw = f.clusters.raw_centers();
  EXPECT_EQ(raw.cols(), 5);
  EXPECT_THROW(parse_cluster_model("{}"), LoadError);
  EXPECT_THROW(parse_cluster_model("not json"), LoadError);
}

TEST(AppliedAngle, ClampsToActuatedRange) {
  EXPECT_EQ(applied_angle(-3.0), 0.0);
  EXPECT_EQ(applied_angle(50.0), 45.0);
  EXPECT_EQ(applied_angle(31.5), 31.5);
}
