#include "micropump/config.hpp"

#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "micropump/errors.hpp"

namespace micropump {
namespace {

using nlohmann::json;

// Reads the keys of one JSON object, rejecting any the reader does not bind.
class ObjectReader {
 public:
  ObjectReader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(path_ + " must be an object");
  }

  template <typename T>
  void bind(const char* key, T& target) {
    bound_.emplace(key);
    const auto it = node_.find(key);
    if (it == node_.end()) return;
    try {
      target = it->get<T>();
    } catch (const json::exception&) {
      throw ConfigError(path_ + "." + key + " has the wrong type");
    }
  }

  void bind_object(const char* key, const std::function<void(ObjectReader&)>& body) {
    bound_.emplace(key);
    const auto it = node_.find(key);
    if (it == node_.end()) return;
    ObjectReader child(*it, path_ + "." + key);
    body(child);
    child.finish();
  }

  void bind_custom(const char* key, const std::function<void(const json&)>& body) {
    bound_.emplace(key);
    const auto it = node_.find(key);
    if (it != node_.end()) body(*it);
  }

  void finish() const {
    for (const auto& [key, value] : node_.items()) {
      if (!bound_.contains(key)) throw ConfigError("unknown configuration key " + path_ + "." + key);
    }
  }

  const std::string& path() const { return path_; }

 private:
  const json& node_;
  std::string path_;
  std::set<std::string, std::less<>> bound_;
};

void read_range(const json& node, const std::string& path, double& lo, double& hi) {
  if (!node.is_array() || node.size() != 2 || !node[0].is_number() || !node[1].is_number()) {
    throw ConfigError(path + " must be a [lo, hi] pair");
  }
  lo = node[0].get<double>();
  hi = node[1].get<double>();
}

void read_train(ObjectReader& r, TrainConfig& t) {
  r.bind("learning_rate", t.learning_rate);
  r.bind("beta1", t.beta1);
  r.bind("beta2", t.beta2);
  r.bind("epsilon", t.epsilon);
  r.bind("epochs", t.epochs);
  r.bind("patience", t.patience);
  r.bind("stationarity_tolerance", t.stationarity_tolerance);
}

json train_json(const TrainConfig& t) {
  return {{"learning_rate", t.learning_rate}, {"beta1", t.beta1},     {"beta2", t.beta2},
          {"epsilon", t.epsilon},             {"epochs", t.epochs},   {"patience", t.patience},
          {"stationarity_tolerance", t.stationarity_tolerance}};
}

}  // namespace

RunConfig::RunConfig() {
  weights_bias.mode = TrainMode::kWeightsBias;
  centers.mode = TrainMode::kCenters;
}

PlantModel RunConfig::effective_plant() const {
  PlantModel p = plant;
  p.seed = seeds.plant;
  p.p_max = pump.p_max_mpa;
  return p;
}

TrainConfig RunConfig::train_config(TrainMode mode) const {
  TrainConfig t = mode == TrainMode::kCenters ? centers : weights_bias;
  t.mode = mode;
  t.seed = seeds.train;
  t.width_floor = clustering.width_floor;
  return t;
}

void RunConfig::set_all_seeds(std::uint64_t seed) { seeds = {seed, seed, seed}; }

void RunConfig::validate() const {
  try {
    pump.validate();
    effective_plant().validate();
    grid.validate(pump);
    if (corrections.bands().empty()) throw ConfigError("corrections table is empty");
    if (corrections.upper_limit() < pump.p_max_mpa) {
      throw ConfigError("corrections table must cover [0, p_max]");
    }
    if (clustering.k < 1) throw ConfigError("clustering.k must be at least 1");
    if (clustering.k > grid.train_count) throw ConfigError("clustering.k exceeds the training split size");
    if (clustering.restarts < 1 || clustering.max_iter < 1) {
      throw ConfigError("clustering restarts and max_iter must be positive");
    }
    if (!(clustering.width_floor > 0.0)) throw ConfigError("clustering.width_floor must be positive");
    train_config(TrainMode::kWeightsBias).validate();
    train_config(TrainMode::kCenters).validate();
    if (!(fixed_angle >= 0.0 && fixed_angle <= kMaxActuatedAngle)) {
      throw ConfigError("evaluation.fixed_angle must lie in [0, 45]");
    }
    calibration.validate();
    if (!(calibration_noise >= 0.0)) throw ConfigError("calibration.noise must be non-negative");
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("invalid configuration: ") + e.what());
  }
}

RunConfig parse_run_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("configuration is not valid JSON: ") + e.what());
  }
  RunConfig c;
  ObjectReader root(doc, "config");

  root.bind_object("plant", [&](ObjectReader& r) {
    auto& p = c.plant;
    r.bind("residual_lo", p.residual_lo);
    r.bind("residual_hi", p.residual_hi);
    r.bind("severity", p.severity);
    r.bind("pressure_offset", p.pressure_offset);
    r.bind("decay", p.decay);
    r.bind("mistuning", p.mistuning);
    r.bind("theta0", p.theta0);
    r.bind("coef_pressure", p.coef_pressure);
    r.bind("coef_speed", p.coef_speed);
    r.bind("coef_flow", p.coef_flow);
    r.bind("coef_viscosity", p.coef_viscosity);
    r.bind("pressure_knee", p.pressure_knee);
    r.bind("knee_width", p.knee_width);
    r.bind("omega_ref", p.omega_ref);
    r.bind("flow_ref", p.flow_ref);
    r.bind("mu_ref", p.mu_ref);
    r.bind("noise_sd", p.noise_sd);
  });

  root.bind_object("grid", [&](ObjectReader& r) {
    auto& g = c.grid;
    r.bind_custom("flow", [&](const json& n) { read_range(n, r.path() + ".flow", g.flow_lo, g.flow_hi); });
    r.bind_custom("pressure",
                  [&](const json& n) { read_range(n, r.path() + ".pressure", g.pressure_lo, g.pressure_hi); });
    r.bind_custom("period", [&](const json& n) { read_range(n, r.path() + ".period", g.period_lo, g.period_hi); });
    r.bind("fluids", g.fluids);
    r.bind_custom("split", [&](const json& n) {
      if (!n.is_array() || n.size() != 3) throw ConfigError(r.path() + ".split must be [train, val, test]");
      try {
        g.train_count = n[0].get<std::size_t>();
        g.validation_count = n[1].get<std::size_t>();
        g.test_count = n[2].get<std::size_t>();
      } catch (const json::exception&) {
        throw ConfigError(r.path() + ".split must hold non-negative integers");
      }
    });
    r.bind_object("sweep", [&](ObjectReader& s) {
      s.bind("lo", g.sweep.lo);
      s.bind("hi", g.sweep.hi);
      s.bind("step", g.sweep.step);
    });
  });

  root.bind_object("pump", [&](ObjectReader& r) {
    auto& p = c.pump;
    r.bind("pump_volume_ul", p.pump_volume_ul);
    r.bind("plunger_area_mm2", p.plunger_area_mm2);
    r.bind("step_displacement_mm", p.step_displacement_mm);
    r.bind("rev_displacement_mm", p.rev_displacement_mm);
    r.bind("steps_per_cycle", p.steps_per_cycle);
    r.bind("p_max_mpa", p.p_max_mpa);
    r.bind("motor_speed_max_steps_s", p.motor_speed_max_steps_s);
  });

  root.bind_custom("corrections", [&](const json& n) {
    if (!n.is_array()) throw ConfigError("config.corrections must be an array of bands");
    std::vector<CorrectionBand> bands;
    for (std::size_t i = 0; i < n.size(); ++i) {
      ObjectReader r(n[i], "config.corrections[" + std::to_string(i) + "]");
      CorrectionBand band;
      r.bind("lo", band.lo_mpa);
      r.bind("hi", band.hi_mpa);
      r.bind("f", band.f);
      r.bind("z", band.z);
      r.finish();
      bands.push_back(band);
    }
    try {
      c.corrections = CorrectionTable(std::move(bands));
    } catch (const DomainError& e) {
      throw ConfigError(std::string("config.corrections: ") + e.what());
    }
  });

  root.bind_custom("flow_sign", [&](const json& n) {
    if (!n.is_number_integer() || (n.get<int>() != 1 && n.get<int>() != -1)) {
      throw ConfigError("config.flow_sign must be 1 or -1");
    }
    c.flow_sign = n.get<int>() == 1 ? FlowSign::kPlus : FlowSign::kMinus;
  });

  root.bind_object("clustering", [&](ObjectReader& r) {
    r.bind("k", c.clustering.k);
    r.bind("restarts", c.clustering.restarts);
    r.bind("max_iter", c.clustering.max_iter);
    r.bind("standardize", c.clustering.standardize);
    r.bind("standardize_angle", c.clustering.standardize_angle);
    r.bind("width_floor", c.clustering.width_floor);
  });

  root.bind_object("training", [&](ObjectReader& r) {
    r.bind_object("weights_bias", [&](ObjectReader& t) { read_train(t, c.weights_bias); });
    r.bind_object("centers", [&](ObjectReader& t) { read_train(t, c.centers); });
  });

  root.bind_object("seeds", [&](ObjectReader& r) {
    r.bind("plant", c.seeds.plant);
    r.bind("data", c.seeds.data);
    r.bind("train", c.seeds.train);
  });

  root.bind_object("evaluation", [&](ObjectReader& r) { r.bind("fixed_angle", c.fixed_angle); });

  root.bind_object("calibration", [&](ObjectReader& r) {
    r.bind("noise", c.calibration_noise);
    r.bind("low_pressure", c.calibration.low_pressure_mpa);
    r.bind("run_minutes", c.calibration.run_minutes);
    r.bind("band_position", c.calibration.band_position);
    r.bind("round_to_integer", c.calibration.round_to_integer);
  });

  root.bind_custom("output_dir", [&](const json& n) {
    if (!n.is_string()) throw ConfigError("config.output_dir must be a string");
    c.output_dir = n.get<std::string>();
  });

  root.finish();
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open configuration " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_run_config(buffer.str());
}

std::string serialize_run_config(const RunConfig& c) {
  const auto& p = c.plant;
  const auto& g = c.grid;
  json bands = json::array();
  for (const auto& b : c.corrections.bands()) {
    bands.push_back({{"lo", b.lo_mpa}, {"hi", b.hi_mpa}, {"f", b.f}, {"z", b.z}});
  }
  json doc = {
      {"plant",
       {{"residual_lo", p.residual_lo},
        {"residual_hi", p.residual_hi},
        {"severity", p.severity},
        {"pressure_offset", p.pressure_offset},
        {"decay", p.decay},
        {"mistuning", p.mistuning},
        {"theta0", p.theta0},
        {"coef_pressure", p.coef_pressure},
        {"coef_speed", p.coef_speed},
        {"coef_flow", p.coef_flow},
        {"coef_viscosity", p.coef_viscosity},
        {"pressure_knee", p.pressure_knee},
        {"knee_width", p.knee_width},
        {"omega_ref", p.omega_ref},
        {"flow_ref", p.flow_ref},
        {"mu_ref", p.mu_ref},
        {"noise_sd", p.noise_sd}}},
      {"grid",
       {{"flow", {g.flow_lo, g.flow_hi}},
        {"pressure", {g.pressure_lo, g.pressure_hi}},
        {"period", {g.period_lo, g.period_hi}},
        {"fluids", g.fluids},
        {"split", {g.train_count, g.validation_count, g.test_count}},
        {"sweep", {{"lo", g.sweep.lo}, {"hi", g.sweep.hi}, {"step", g.sweep.step}}}}},
      {"pump",
       {{"pump_volume_ul", c.pump.pump_volume_ul},
        {"plunger_area_mm2", c.pump.plunger_area_mm2},
        {"step_displacement_mm", c.pump.step_displacement_mm},
        {"rev_displacement_mm", c.pump.rev_displacement_mm},
        {"steps_per_cycle", c.pump.steps_per_cycle},
        {"p_max_mpa", c.pump.p_max_mpa},
        {"motor_speed_max_steps_s", c.pump.motor_speed_max_steps_s}}},
      {"corrections", bands},
      {"flow_sign", static_cast<int>(c.flow_sign)},
      {"clustering",
       {{"k", c.clustering.k},
        {"restarts", c.clustering.restarts},
        {"max_iter", c.clustering.max_iter},
        {"standardize", c.clustering.standardize},
        {"standardize_angle", c.clustering.standardize_angle},
        {"width_floor", c.clustering.width_floor}}},
      {"training", {{"weights_bias", train_json(c.weights_bias)}, {"centers", train_json(c.centers)}}},
      {"seeds", {{"plant", c.seeds.plant}, {"data", c.seeds.data}, {"train", c.seeds.train}}},
      {"evaluation", {{"fixed_angle", c.fixed_angle}}},
      {"calibration",
       {{"noise", c.calibration_noise},
        {"low_pressure", c.calibration.low_pressure_mpa},
        {"run_minutes", c.calibration.run_minutes},
        {"band_position", c.calibration.band_position},
        {"round_to_integer", c.calibration.round_to_integer}}},
      {"output_dir", c.output_dir.generic_string()},
  };
  return doc.dump(2) + "\n";
}

}  // namespace micropump
