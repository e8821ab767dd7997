#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "generators.hpp"
#include "micropump/errors.hpp"
#include "micropump/rbf.hpp"

using namespace micropump;
using namespace micropump::testing;

namespace {

// Plain-loop evaluation of the network output.
double summed_output(const RbfModel& model, const Eigen::VectorXd& x) {
  double total = model.bias;
  for (Eigen::Index j = 0; j < model.hidden_count(); ++j) {
    double d2 = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double z = (x[i] - model.scaler.means()[i]) / model.scaler.sds()[i];
      d2 += (z - model.centers(j, i)) * (z - model.centers(j, i));
    }
    total += model.weights[j] * std::exp(-d2 / (2.0 * model.widths[j] * model.widths[j]));
  }
  return total;
}

}  // namespace

TEST(Kernel, Examples) {
  EXPECT_EQ(kernel(0.0, 0.3), 1.0);
  EXPECT_NEAR(kernel(1.7, 1.7), 0.60653065971263342, 1e-15);
  EXPECT_DOUBLE_EQ(kernel(2.0 * 0.8, 2.0 * 1.3), kernel(0.8, 1.3));
  EXPECT_THROW(kernel(1.0, 0.0), DomainError);
  EXPECT_THROW(kernel(-1.0, 1.0), DomainError);
}

TEST(Kernel, BoundedAndStrictlyDecreasing) {
  Rng rng(21);
  for (int i = 0; i < 500; ++i) {
    const double w = rng.uniform(0.1, 5.0);
    const double d1 = rng.uniform(0.0, 3.0);
    const double d2 = d1 + rng.uniform(1e-3, 3.0);
    const double k1 = kernel(d1, w);
    EXPECT_GT(k1, 0.0);
    EXPECT_LE(k1, 1.0);
    EXPECT_LT(kernel(d2, w), k1);
  }
}

TEST(Forward, BiasOnlyNetwork) {
  Rng rng(22);
  RbfModel model = random_model(rng, 3, 4);
  model.weights.setZero();
  model.bias = 17.25;
  for (int i = 0; i < 20; ++i) EXPECT_EQ(forward(model, random_rows(rng, model, 1).row(0).transpose()), 17.25);
}

TEST(Forward, SingleUnitAtItsCenter) {
  RbfModel model;
  model.scaler = FeatureScaler(Eigen::Vector4d(1, 2, 3, 4), Eigen::Vector4d(2, 2, 2, 2));
  model.centers = Eigen::RowVector4d(0.5, -0.5, 1.0, 0.0);
  model.widths = Eigen::VectorXd::Constant(1, 0.4);
  model.weights = Eigen::VectorXd::Constant(1, 1.0);
  model.bias = 0.0;
  EXPECT_EQ(forward(model, Eigen::Vector4d(2, 1, 5, 4)), 1.0);
}

TEST(Forward, MatchesTermByTermSummation) {
  Rng rng(23);
  for (int t = 0; t < 100; ++t) {
    const auto k = static_cast<Eigen::Index>(1 + rng.index(8));
    const RbfModel model = random_model(rng, k, 4);
    const Eigen::MatrixXd rows = random_rows(rng, model, 10);
    for (Eigen::Index u = 0; u < rows.rows(); ++u) {
      const Eigen::VectorXd x = rows.row(u).transpose();
      EXPECT_NEAR(forward(model, x), summed_output(model, x), 1e-12 * (1.0 + std::abs(summed_output(model, x))));
    }
  }
}

TEST(Forward, PermutationInvariant) {
  Rng rng(24);
  for (int t = 0; t < 50; ++t) {
    const RbfModel model = random_model(rng, 6, 4);
    std::vector<Eigen::Index> perm(6);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(std::span<Eigen::Index>(perm));
    RbfModel permuted = model;
    for (Eigen::Index j = 0; j < 6; ++j) {
      permuted.centers.row(j) = model.centers.row(perm[static_cast<std::size_t>(j)]);
      permuted.widths[j] = model.widths[perm[static_cast<std::size_t>(j)]];
      permuted.weights[j] = model.weights[perm[static_cast<std::size_t>(j)]];
    }
    const Eigen::VectorXd x = random_rows(rng, model, 1).row(0).transpose();
    EXPECT_NEAR(forward(model, x), forward(permuted, x), 1e-12 * (1.0 + std::abs(forward(model, x))));
  }
}

TEST(Forward, FarInputsReturnBias) {
  Rng rng(25);
  for (int t = 0; t < 50; ++t) {
    RbfModel model = random_model(rng, 4, 4);
    model.widths = uniform_vector(rng, 4, 0.7, 2.0);
    Eigen::VectorXd z = Eigen::VectorXd::Zero(4);
    z[static_cast<Eigen::Index>(rng.index(4))] = 40.0;  // > 20 from every center
    const Eigen::VectorXd x = model.scaler.inverse_transform(z);
    EXPECT_NEAR(forward(model, x), model.bias, 1e-10);
  }
}

TEST(Forward, RejectsWrongDimension) {
  Rng rng(26);
  const RbfModel model = random_model(rng, 2, 4);
  EXPECT_THROW(forward(model, Eigen::Vector3d(1, 2, 3)), DomainError);
}

TEST(DesignMatrix, ShapeBiasColumnAndConsistency) {
  Rng rng(27);
  for (int t = 0; t < 50; ++t) {
    const auto k = static_cast<Eigen::Index>(1 + rng.index(8));
    const RbfModel model = random_model(rng, k, 4);
    const Eigen::MatrixXd rows = random_rows(rng, model, 12);
    const Eigen::MatrixXd v = design_matrix(model, rows);
    ASSERT_EQ(v.rows(), 12);
    ASSERT_EQ(v.cols(), k + 1);
    EXPECT_TRUE((v.col(k).array() == 1.0).all());
    const Eigen::VectorXd via_matrix = v * model.output_layer();
    for (Eigen::Index u = 0; u < rows.rows(); ++u) {
      const double f = forward(model, rows.row(u).transpose());
      EXPECT_NEAR(via_matrix[u], f, 1e-12 * (1.0 + std::abs(f)));
    }
  }
  const RbfModel model = random_model(rng, 3, 4);
  const Eigen::MatrixXd empty = design_matrix(model, Eigen::MatrixXd(0, 4));
  EXPECT_EQ(empty.rows(), 0);
  EXPECT_EQ(empty.cols(), 4);
  EXPECT_THROW(design_matrix(model, Eigen::MatrixXd::Zero(2, 3)), DomainError);
}

TEST(FeatureScaler, TwoPointCase) {
  Eigen::MatrixXd rows(2, 4);
  rows << 0, 0, 0, 0, 2, 2, 2, 2;
  const auto s = FeatureScaler::fit(rows);
  EXPECT_TRUE(s.means().isApprox(Eigen::Vector4d::Ones()));
  EXPECT_TRUE(s.sds().isApprox(Eigen::Vector4d::Ones()));
  EXPECT_TRUE(s.transform(Eigen::Vector4d::Constant(2.0)).isApprox(Eigen::Vector4d::Ones()));
}

TEST(FeatureScaler, RoundTrip) {
  Rng rng(28);
  for (int t = 0; t < 100; ++t) {
    const Eigen::MatrixXd rows = uniform_matrix(rng, 20, 4, -300.0, 300.0);
    const auto s = FeatureScaler::fit(rows);
    const Eigen::MatrixXd back = s.inverse_transform_rows(s.transform_rows(rows));
    for (Eigen::Index i = 0; i < rows.size(); ++i) {
      EXPECT_NEAR(back(i), rows(i), 1e-12 * std::max(1.0, std::abs(rows(i))));
    }
    const Eigen::MatrixXd z = s.transform_rows(rows);
    EXPECT_LT(z.colwise().mean().cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(FeatureScaler, ConstantColumnNamed) {
  Eigen::MatrixXd rows(3, 2);
  rows << 1, 5, 2, 5, 3, 5;
  const std::string_view names[] = {"mu_cP", "back_pressure_MPa"};
  try {
    FeatureScaler::fit(rows, names);
    FAIL() << "constant column accepted";
  } catch (const CalibrationError& e) {
    EXPECT_NE(std::string(e.what()).find("back_pressure_MPa"), std::string::npos);
  }
  EXPECT_THROW(FeatureScaler::fit(Eigen::MatrixXd::Ones(1, 2)), CalibrationError);
}

TEST(ModelFile, RoundTripIsBitExact) {
  Rng rng(29);
  for (int t = 0; t < 50; ++t) {
    RbfModel model = random_model(rng, static_cast<Eigen::Index>(1 + rng.index(8)), 4);
    model.metadata = {"centers", rng.next(), static_cast<int>(rng.index(500)), rng.uniform(0.0, 1e4)};
    const RbfModel back = parse_model(serialize_model(model));
    EXPECT_EQ(back.scaler.means(), model.scaler.means());
    EXPECT_EQ(back.scaler.sds(), model.scaler.sds());
    EXPECT_EQ(back.centers, model.centers);
    EXPECT_EQ(back.widths, model.widths);
    EXPECT_EQ(back.weights, model.weights);
    EXPECT_EQ(back.bias, model.bias);
    EXPECT_EQ(back.metadata.mode, model.metadata.mode);
    EXPECT_EQ(back.metadata.seed, model.metadata.seed);
    EXPECT_EQ(back.metadata.epochs, model.metadata.epochs);
    EXPECT_EQ(back.metadata.final_loss, model.metadata.final_loss);
    EXPECT_EQ(serialize_model(back), serialize_model(model));
  }
}

TEST(ModelFile, SaveAndLoad) {
  Rng rng(30);
  const RbfModel model = random_model(rng, 5, 4);
  const auto path = std::filesystem::temp_directory_path() / "micropump_rbf_test_model.json";
  save_model(model, path);
  const RbfModel back = load_model(path);
  EXPECT_EQ(back.centers, model.centers);
  std::filesystem::remove(path);
  EXPECT_THROW(load_model(path), LoadError);
}

TEST(ModelFile, Rejections) {
  Rng rng(31);
  const RbfModel model = random_model(rng, 3, 4);
  const auto doc = nlohmann::json::parse(serialize_model(model));

  auto zero_width = doc;
  zero_width["widths"][1] = 0.0;
  EXPECT_THROW(parse_model(zero_width.dump()), LoadError);

  auto wrong_version = doc;
  wrong_version["format_version"] = kModelFormatVersion + 1;
  EXPECT_THROW(parse_model(wrong_version.dump()), VersionError);

  auto missing = doc;
  missing.erase("bias");
  EXPECT_THROW(parse_model(missing.dump()), LoadError);

  auto short_center = doc;
  short_center["centers"][0].erase(0);
  EXPECT_THROW(parse_model(short_center.dump()), LoadError);

  auto wrong_k = doc;
  wrong_k["k"] = 4;
  EXPECT_THROW(parse_model(wrong_k.dump()), LoadError);

  auto bad_sd = doc;
  bad_sd["scaler"]["sds"][0] = -1.0;
  EXPECT_THROW(parse_model(bad_sd.dump()), LoadError);

  EXPECT_THROW(parse_model("{not json"), LoadError);
  EXPECT_THROW(parse_model("[]"), LoadError);
}
