#include "micropump/rbf.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <utility>

#include <nlohmann/json.hpp>

#include "micropump/errors.hpp"

namespace micropump {
namespace {

using nlohmann::json;

json to_json_array(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Eigen::VectorXd vector_from(const json& node, const char* field) {
  if (!node.is_array()) throw LoadError(std::string("model field '") + field + "' must be an array");
  Eigen::VectorXd out(static_cast<Eigen::Index>(node.size()));
  for (std::size_t i = 0; i < node.size(); ++i) {
    if (!node[i].is_number()) {
      throw LoadError(std::string("model field '") + field + "' holds a non-number");
    }
    out[static_cast<Eigen::Index>(i)] = node[i].get<double>();
  }
  return out;
}

const json& field(const json& node, const char* name) {
  const auto it = node.find(name);
  if (it == node.end()) throw LoadError(std::string("model file lacks field '") + name + "'");
  return *it;
}

}  // namespace

FeatureScaler::FeatureScaler(Eigen::VectorXd means, Eigen::VectorXd sds)
    : means_(std::move(means)), sds_(std::move(sds)) {
  if (means_.size() != sds_.size()) throw DomainError("scaler means and sds differ in length");
  for (Eigen::Index i = 0; i < sds_.size(); ++i) {
    if (!(sds_[i] > 0.0) || !std::isfinite(sds_[i]) || !std::isfinite(means_[i])) {
      throw DomainError("scaler standard deviations must be positive and finite");
    }
  }
}

FeatureScaler FeatureScaler::fit(const Eigen::MatrixXd& rows,
                                 std::span<const std::string_view> names) {
  if (rows.rows() < 2) throw CalibrationError("scaler needs at least two samples");
  const Eigen::VectorXd means = rows.colwise().mean().transpose();
  Eigen::VectorXd sds(rows.cols());
  for (Eigen::Index j = 0; j < rows.cols(); ++j) {
    const double var = (rows.col(j).array() - means[j]).square().mean();
    sds[j] = std::sqrt(var);
    if (!(sds[j] > 0.0)) {
      std::string name = static_cast<std::size_t>(j) < names.size()
                             ? std::string(names[static_cast<std::size_t>(j)])
                             : "column " + std::to_string(j);
      throw CalibrationError("feature '" + name + "' is constant; cannot standardize");
    }
  }
  return FeatureScaler(means, sds);
}

FeatureScaler FeatureScaler::identity(Eigen::Index dim) {
  return FeatureScaler(Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Ones(dim));
}

Eigen::VectorXd FeatureScaler::transform(const Eigen::VectorXd& x) const {
  if (x.size() != dim()) throw DomainError("feature vector has the wrong dimension");
  return ((x - means_).array() / sds_.array()).matrix();
}

Eigen::VectorXd FeatureScaler::inverse_transform(const Eigen::VectorXd& z) const {
  if (z.size() != dim()) throw DomainError("feature vector has the wrong dimension");
  return (z.array() * sds_.array()).matrix() + means_;
}

Eigen::MatrixXd FeatureScaler::transform_rows(const Eigen::MatrixXd& rows) const {
  if (rows.cols() != dim()) throw DomainError("feature rows have the wrong dimension");
  return (rows.rowwise() - means_.transpose()).array().rowwise() / sds_.transpose().array();
}

Eigen::MatrixXd FeatureScaler::inverse_transform_rows(const Eigen::MatrixXd& rows) const {
  if (rows.cols() != dim()) throw DomainError("feature rows have the wrong dimension");
  Eigen::MatrixXd out = rows.array().rowwise() * sds_.transpose().array();
  return out.rowwise() + means_.transpose();
}

void RbfModel::validate() const {
  if (hidden_count() < 1) throw DomainError("an RBF model needs at least one hidden node");
  if (widths.size() != hidden_count() || weights.size() != hidden_count()) {
    throw DomainError("widths and weights must have one entry per center");
  }
  if (scaler.dim() != input_dim()) throw DomainError("scaler dimension differs from center dimension");
  for (Eigen::Index j = 0; j < widths.size(); ++j) {
    if (!(widths[j] > 0.0) || !std::isfinite(widths[j])) {
      throw DomainError("RBF widths must be positive and finite");
    }
  }
  if (!centers.allFinite() || !weights.allFinite() || !std::isfinite(bias)) {
    throw DomainError("RBF parameters must be finite");
  }
}

Eigen::VectorXd RbfModel::output_layer() const {
  Eigen::VectorXd stacked(weights.size() + 1);
  stacked << weights, bias;
  return stacked;
}

void RbfModel::set_output_layer(const Eigen::VectorXd& stacked) {
  if (stacked.size() != hidden_count() + 1) throw DomainError("output layer has the wrong length");
  weights = stacked.head(hidden_count());
  bias = stacked[hidden_count()];
}

double kernel(double distance, double width) {
  if (!(width > 0.0)) throw DomainError("kernel width must be positive");
  if (distance < 0.0) throw DomainError("kernel distance must be non-negative");
  return std::exp(-(distance * distance) / (2.0 * width * width));
}

Eigen::MatrixXd activation_matrix(const Eigen::MatrixXd& centers, const Eigen::VectorXd& widths,
                                  const Eigen::MatrixXd& standardized_rows) {
  if (standardized_rows.rows() > 0 && standardized_rows.cols() != centers.cols()) {
    throw DomainError("input rows do not match the center dimension");
  }
  const Eigen::Index n = standardized_rows.rows();
  const Eigen::Index k = centers.rows();
  Eigen::MatrixXd v(n, k + 1);
  for (Eigen::Index u = 0; u < n; ++u) {
    for (Eigen::Index j = 0; j < k; ++j) {
      const double sq = (standardized_rows.row(u) - centers.row(j)).squaredNorm();
      v(u, j) = std::exp(-sq / (2.0 * widths[j] * widths[j]));
    }
    v(u, k) = 1.0;
  }
  return v;
}

Eigen::MatrixXd design_matrix(const RbfModel& model, const Eigen::MatrixXd& rows) {
  model.validate();
  if (rows.rows() == 0) return Eigen::MatrixXd(0, model.hidden_count() + 1);
  return activation_matrix(model.centers, model.widths, model.scaler.transform_rows(rows));
}

double forward(const RbfModel& model, const Eigen::VectorXd& x) {
  model.validate();
  if (x.size() != model.input_dim()) throw DomainError("input has the wrong dimension");
  const Eigen::VectorXd z = model.scaler.transform(x);
  double y = model.bias;
  for (Eigen::Index j = 0; j < model.hidden_count(); ++j) {
    const double sq = (z.transpose() - model.centers.row(j)).squaredNorm();
    y += model.weights[j] * std::exp(-sq / (2.0 * model.widths[j] * model.widths[j]));
  }
  return y;
}

Eigen::VectorXd predict(const RbfModel& model, const Eigen::MatrixXd& rows) {
  return design_matrix(model, rows) * model.output_layer();
}

std::string serialize_model(const RbfModel& model) {
  model.validate();
  json centers = json::array();
  for (Eigen::Index j = 0; j < model.hidden_count(); ++j) {
    centers.push_back(to_json_array(model.centers.row(j).transpose()));
  }
  json doc = {
      {"format_version", kModelFormatVersion},
      {"input_dim", model.input_dim()},
      {"k", model.hidden_count()},
      {"scaler", {{"means", to_json_array(model.scaler.means())},
                  {"sds", to_json_array(model.scaler.sds())}}},
      {"centers", centers},
      {"widths", to_json_array(model.widths)},
      {"weights", to_json_array(model.weights)},
      {"bias", model.bias},
      {"metadata", {{"mode", model.metadata.mode},
                    {"seed", model.metadata.seed},
                    {"epochs", model.metadata.epochs},
                    {"final_loss", model.metadata.final_loss}}},
  };
  return doc.dump(2) + "\n";
}

RbfModel parse_model(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw LoadError(std::string("malformed model file: ") + e.what());
  }
  if (!doc.is_object()) throw LoadError("model file must hold a JSON object");
  const auto& version = field(doc, "format_version");
  if (!version.is_number_integer() || version.get<int>() != kModelFormatVersion) {
    throw VersionError("unsupported model format_version " + version.dump() + " (expected " +
                       std::to_string(kModelFormatVersion) + ")");
  }
  try {
    const auto input_dim = field(doc, "input_dim").get<Eigen::Index>();
    const auto k = field(doc, "k").get<Eigen::Index>();
    if (input_dim < 1 || k < 1) throw LoadError("model dimensions must be positive");

    const auto& scaler = field(doc, "scaler");
    RbfModel model;
    model.scaler = FeatureScaler(vector_from(field(scaler, "means"), "scaler.means"),
                                 vector_from(field(scaler, "sds"), "scaler.sds"));

    const auto& centers = field(doc, "centers");
    if (!centers.is_array() || static_cast<Eigen::Index>(centers.size()) != k) {
      throw LoadError("model field 'centers' must hold k rows");
    }
    model.centers.resize(k, input_dim);
    for (Eigen::Index j = 0; j < k; ++j) {
      const Eigen::VectorXd row = vector_from(centers[static_cast<std::size_t>(j)], "centers");
      if (row.size() != input_dim) throw LoadError("center row has the wrong dimension");
      model.centers.row(j) = row.transpose();
    }
    model.widths = vector_from(field(doc, "widths"), "widths");
    model.weights = vector_from(field(doc, "weights"), "weights");
    const auto& bias = field(doc, "bias");
    if (!bias.is_number()) throw LoadError("model field 'bias' must be a number");
    model.bias = bias.get<double>();

    const auto& meta = field(doc, "metadata");
    model.metadata.mode = field(meta, "mode").get<std::string>();
    model.metadata.seed = field(meta, "seed").get<std::uint64_t>();
    model.metadata.epochs = field(meta, "epochs").get<int>();
    model.metadata.final_loss = field(meta, "final_loss").get<double>();

    model.validate();
    return model;
  } catch (const json::exception& e) {
    throw LoadError(std::string("malformed model file: ") + e.what());
  } catch (const DomainError& e) {
    throw LoadError(std::string("model violates invariants: ") + e.what());
  }
}

void save_model(const RbfModel& model, const std::filesystem::path& path) {
  const std::string text = serialize_model(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write model file " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing model file " + path.string());
}

RbfModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open model file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_model(buffer.str());
}

}  // namespace micropump
