#include "micropump/evaluation.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "micropump/errors.hpp"
#include "micropump/text.hpp"

namespace micropump {
namespace {

using nlohmann::json;

constexpr const char* kNoData = "no data";

json array_of(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Eigen::VectorXd vector_of(const json& node) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(node.size()));
  for (std::size_t i = 0; i < node.size(); ++i) v[static_cast<Eigen::Index>(i)] = node.at(i).get<double>();
  return v;
}

std::string cell(const std::optional<double>& value) {
  return value ? fmt::format("{:.4f}", *value) : std::string(kNoData);
}

std::string csv_cell(const std::optional<double>& value) {
  return value ? format_full(*value) : std::string();
}

}  // namespace

Eigen::VectorXd ClusterModel::joint_point(const LabeledPoint& lp) const {
  const auto f = lp.point.features();
  Eigen::VectorXd raw(static_cast<Eigen::Index>(kFeatureCount) + 1);
  for (std::size_t j = 0; j < kFeatureCount; ++j) raw[static_cast<Eigen::Index>(j)] = f[j];
  raw[static_cast<Eigen::Index>(kFeatureCount)] = lp.optimal_angle_deg;
  return joint_scaler.transform(raw);
}

std::size_t ClusterModel::assign(const LabeledPoint& lp) const {
  return nearest_center(joint_point(lp), centers);
}

Eigen::MatrixXd ClusterModel::raw_centers() const { return joint_scaler.inverse_transform_rows(centers); }

FeatureScaler ClusterModel::feature_scaler() const {
  const Eigen::Index m = joint_scaler.dim() - 1;
  return FeatureScaler(joint_scaler.means().head(m), joint_scaler.sds().head(m));
}

ClusterModel make_cluster_model(const ClusterResult& result, const FeatureScaler& joint_scaler) {
  if (result.centers.cols() != joint_scaler.dim()) throw DomainError("cluster centers and scaler differ in dimension");
  ClusterModel model;
  model.joint_scaler = joint_scaler;
  model.centers = result.centers;
  model.iterations = result.iterations;
  model.converged = result.converged;
  model.quantization_error = result.quantization_error;
  model.squared_error = result.squared_error;
  model.sizes = result.cluster_sizes();
  return model;
}

std::string serialize_cluster_model(const ClusterModel& model) {
  json centers = json::array();
  for (Eigen::Index j = 0; j < model.centers.rows(); ++j) centers.push_back(array_of(model.centers.row(j).transpose()));
  json doc = {
      {"format_version", 1},
      {"k", model.k()},
      {"scaler", {{"means", array_of(model.joint_scaler.means())}, {"sds", array_of(model.joint_scaler.sds())}}},
      {"centers", centers},
      {"iterations", model.iterations},
      {"converged", model.converged},
      {"quantization_error", model.quantization_error},
      {"squared_error", model.squared_error},
      {"sizes", model.sizes},
  };
  return doc.dump(2) + "\n";
}

ClusterModel parse_cluster_model(std::string_view text) {
  try {
    const json doc = json::parse(text);
    if (doc.at("format_version").get<int>() != 1) throw VersionError("unsupported cluster file version");
    ClusterModel model;
    model.joint_scaler = FeatureScaler(vector_of(doc.at("scaler").at("means")), vector_of(doc.at("scaler").at("sds")));
    const auto& centers = doc.at("centers");
    const auto k = doc.at("k").get<Eigen::Index>();
    if (k < 1 || static_cast<Eigen::Index>(centers.size()) != k) throw LoadError("cluster file must hold k centers");
    model.centers.resize(k, model.joint_scaler.dim());
    for (Eigen::Index j = 0; j < k; ++j) {
      const Eigen::VectorXd row = vector_of(centers.at(static_cast<std::size_t>(j)));
      if (row.size() != model.joint_scaler.dim()) throw LoadError("cluster center has the wrong dimension");
      model.centers.row(j) = row.transpose();
    }
    model.iterations = doc.at("iterations").get<int>();
    model.converged = doc.at("converged").get<bool>();
    model.quantization_error = doc.at("quantization_error").get<double>();
    model.squared_error = doc.at("squared_error").get<double>();
    model.sizes = doc.at("sizes").get<std::vector<std::size_t>>();
    return model;
  } catch (const json::exception& e) {
    throw LoadError(std::string("malformed cluster file: ") + e.what());
  } catch (const DomainError& e) {
    throw LoadError(std::string("cluster file violates invariants: ") + e.what());
  }
}

void save_cluster_model(const ClusterModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write cluster file " + path.string());
  out << serialize_cluster_model(model);
}

ClusterModel load_cluster_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open cluster file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_cluster_model(buffer.str());
}

double applied_angle(double predicted) { return std::clamp(predicted, 0.0, kMaxActuatedAngle); }

ClusterReport evaluate(const std::vector<LabeledPoint>& test, const PlantModel& plant,
                       const ClusterModel& clusters, const EvaluationInputs& inputs) {
  if (!(inputs.fixed_angle >= 0.0 && inputs.fixed_angle <= kMaxActuatedAngle)) {
    throw DomainError("fixed benchmark angle must lie in [0, 45] degrees");
  }
  const std::array<const RbfModel*, 2> models = {inputs.weights_model, inputs.centers_model};
  for (const auto* model : models) {
    if (model && model->input_dim() != static_cast<Eigen::Index>(kFeatureCount)) {
      throw DomainError("model input dimension does not match the dataset features");
    }
  }

  ClusterReport report;
  report.fixed_angle = inputs.fixed_angle;
  report.has_weights = inputs.weights_model != nullptr;
  report.has_centers = inputs.centers_model != nullptr;

  const std::size_t k = clusters.k();
  std::vector<std::array<double, kStrategyCount>> drop_sum(k), angle_sum(k);
  std::vector<double> label_sum(k, 0.0);
  std::vector<std::size_t> counts(k, 0);
  for (auto& s : drop_sum) s.fill(0.0);
  for (auto& s : angle_sum) s.fill(0.0);

  for (const auto& lp : test) {
    const std::size_t c = clusters.assign(lp);
    const auto f = lp.point.features();
    const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(f.data(), static_cast<Eigen::Index>(f.size()));

    std::array<std::optional<double>, kStrategyCount> angles;
    angles[0] = 0.0;
    angles[1] = inputs.fixed_angle;
    for (std::size_t m = 0; m < models.size(); ++m) {
      if (models[m]) angles[m + 2] = applied_angle(forward(*models[m], x));
    }
    for (std::size_t s = 0; s < kStrategyCount; ++s) {
      if (!angles[s]) continue;
      drop_sum[c][s] += simulate_pulse(plant, lp.point, *angles[s], inputs.trial);
      angle_sum[c][s] += *angles[s];
    }
    label_sum[c] += lp.optimal_angle_deg;
    ++counts[c];
  }

  for (std::size_t c = 0; c < k; ++c) {
    ClusterRow row;
    row.cluster = c;
    row.count = counts[c];
    if (counts[c] > 0) {
      const double n = static_cast<double>(counts[c]);
      for (std::size_t s = 0; s < kStrategyCount; ++s) {
        const bool present = s < 2 || (s == 2 && report.has_weights) || (s == 3 && report.has_centers);
        if (!present) continue;
        row.drop[s] = drop_sum[c][s] / n;
        row.angle[s] = angle_sum[c][s] / n;
      }
      row.label_angle = label_sum[c] / n;
    }
    report.rows.push_back(row);
  }
  return report;
}

std::string render_report_text(const ClusterReport& report) {
  std::string out;
  out += fmt::format("Averaged pressure drop at the shifting point (MPa)\n");
  out += fmt::format("{:>7} {:>5} {:>12} {:>12} {:>14} {:>12}\n", "center", "n", "no overlap",
                     fmt::format("fixed {:.0f}", report.fixed_angle), "weights/bias", "centers");
  for (const auto& row : report.rows) {
    out += fmt::format("{:>7} {:>5} {:>12} {:>12} {:>14} {:>12}\n", row.cluster + 1, row.count,
                       cell(row.drop[0]), cell(row.drop[1]), cell(row.drop[2]), cell(row.drop[3]));
  }
  out += fmt::format("\nAveraged overlap angle per center (deg)\n");
  out += fmt::format("{:>7} {:>5} {:>12} {:>14} {:>12}\n", "center", "n", "label", "weights/bias", "centers");
  for (const auto& row : report.rows) {
    out += fmt::format("{:>7} {:>5} {:>12} {:>14} {:>12}\n", row.cluster + 1, row.count,
                       cell(row.label_angle), cell(row.angle[2]), cell(row.angle[3]));
  }
  return out;
}

std::string render_drops_csv(const ClusterReport& report) {
  std::string out = "cluster,count,none,fixed,weights_bias,centers\n";
  for (const auto& row : report.rows) {
    out += std::to_string(row.cluster + 1) + "," + std::to_string(row.count);
    for (const auto& d : row.drop) out += "," + csv_cell(d);
    out += "\n";
  }
  return out;
}

std::string render_angles_csv(const ClusterReport& report) {
  std::string out = "cluster,count,label_angle,weights_bias_angle,centers_angle\n";
  for (const auto& row : report.rows) {
    out += std::to_string(row.cluster + 1) + "," + std::to_string(row.count) + "," + csv_cell(row.label_angle) +
           "," + csv_cell(row.angle[2]) + "," + csv_cell(row.angle[3]) + "\n";
  }
  return out;
}

}  // namespace micropump
