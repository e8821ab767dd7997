#include "micropump/dataset.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "micropump/errors.hpp"
#include "micropump/text.hpp"

namespace micropump {
namespace {

void write_rows(std::ostream& out, const std::vector<LabeledPoint>& points, const char* split) {
  for (const auto& lp : points) {
    const auto& p = lp.point;
    out << p.fluid.name << ',' << format_full(p.fluid.mu_cp) << ',' << format_full(p.back_pressure_mpa)
        << ',' << format_full(p.period_s) << ',' << format_full(p.set_flow_ml_min) << ','
        << format_full(p.omega_rev_min) << ',' << format_full(p.valve_flow_ml_min) << ','
        << format_full(lp.optimal_angle_deg) << ',' << format_full(lp.min_pulse_mpa) << ',' << split
        << '\n';
  }
}

}  // namespace

void write_dataset_csv(const Dataset& dataset, std::ostream& out) {
  out << kDatasetHeader << '\n';
  write_rows(out, dataset.train, "train");
  write_rows(out, dataset.validation, "val");
  write_rows(out, dataset.test, "test");
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write dataset " + path.string());
  write_dataset_csv(dataset, out);
  if (!out) throw std::runtime_error("failed writing dataset " + path.string());
}

Dataset read_dataset_csv(std::istream& in) {
  Dataset dataset;
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw LoadError("dataset is empty");
  ++line_no;
  if (trim(line) != kDatasetHeader) throw LoadError("dataset line 1: unexpected header");

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto where = "dataset line " + std::to_string(line_no) + ": ";
    const auto fields = split_fields(trim(line));
    if (fields.size() != 10) throw LoadError(where + "expected 10 fields");
    double values[8];
    for (int i = 0; i < 8; ++i) {
      const auto v = parse_double(fields[static_cast<std::size_t>(i) + 1]);
      if (!v) throw LoadError(where + "field " + std::to_string(i + 2) + " is not a number");
      values[i] = *v;
    }
    LabeledPoint lp;
    lp.point.fluid = {std::string(trim(fields[0])), values[0]};
    lp.point.back_pressure_mpa = values[1];
    lp.point.period_s = values[2];
    lp.point.set_flow_ml_min = values[3];
    lp.point.omega_rev_min = values[4];
    lp.point.valve_flow_ml_min = values[5];
    lp.optimal_angle_deg = values[6];
    lp.min_pulse_mpa = values[7];
    if (!(lp.point.fluid.mu_cp > 0.0) || !(lp.point.back_pressure_mpa > 0.0) || !(lp.point.period_s > 0.0)) {
      throw LoadError(where + "viscosity, pressure and period must be positive");
    }
    const auto split = trim(fields[9]);
    if (split == "train") {
      dataset.train.push_back(std::move(lp));
    } else if (split == "val") {
      dataset.validation.push_back(std::move(lp));
    } else if (split == "test") {
      dataset.test.push_back(std::move(lp));
    } else {
      throw LoadError(where + "unknown split '" + std::string(split) + "'");
    }
  }
  return dataset;
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open dataset " + path.string());
  return read_dataset_csv(in);
}

}  // namespace micropump
