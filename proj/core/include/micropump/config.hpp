#pragma once

// Run configuration: one JSON document describing the plant, sampling grid,
// pump constants, clustering and training settings, and the three seeds
// every random stream derives from. Unknown keys are rejected; missing keys
// keep their defaults.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "micropump/calibration.hpp"
#include "micropump/plant.hpp"
#include "micropump/pump_model.hpp"
#include "micropump/training.hpp"

namespace micropump {

struct Seeds {
  std::uint64_t plant = 1;
  std::uint64_t data = 2;
  std::uint64_t train = 3;
};

struct ClusteringConfig {
  std::size_t k = 5;
  int restarts = 10;
  int max_iter = 300;
  // z-score the four features before any distance computation.
  bool standardize = true;
  // Also z-score the angle coordinate of the joint clustering space.
  bool standardize_angle = true;
  double width_floor = kDefaultWidthFloor;
};

struct RunConfig {
  PlantModel plant;
  GridConfig grid;
  PumpParameters pump;
  CorrectionTable corrections = CorrectionTable::reference();
  FlowSign flow_sign = FlowSign::kPlus;
  ClusteringConfig clustering;
  TrainConfig weights_bias;
  TrainConfig centers;
  Seeds seeds;
  double fixed_angle = 30.0;
  CalibrationSettings calibration;
  double calibration_noise = 5e-4;  // relative sd of the measured volume
  std::filesystem::path output_dir = "run";

  RunConfig();

  // Plant with the configured plant seed and pump limits applied.
  PlantModel effective_plant() const;
  TrainConfig train_config(TrainMode mode) const;
  void set_all_seeds(std::uint64_t seed);

  // Throws ConfigError.
  void validate() const;
};

// Throws ConfigError on syntax errors, unknown keys or invalid values.
RunConfig parse_run_config(std::string_view text);
RunConfig load_run_config(const std::filesystem::path& path);
std::string serialize_run_config(const RunConfig& config);

}  // namespace micropump
