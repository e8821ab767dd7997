#pragma once

// Dataset CSV with one row per labeled operating point:
//
//   fluid,mu_cP,back_pressure_MPa,period_s,set_flow_mL_min,omega_rev_min,
//   valve_flow_mL_min,optimal_angle_deg,min_pulse_MPa,split
//
// split is one of train, val, test. Numbers are written with round-trip
// precision so a reloaded dataset reproduces the same features bit for bit.

#include <filesystem>
#include <iosfwd>

#include "micropump/plant.hpp"

namespace micropump {

inline constexpr const char* kDatasetHeader =
    "fluid,mu_cP,back_pressure_MPa,period_s,set_flow_mL_min,omega_rev_min,"
    "valve_flow_mL_min,optimal_angle_deg,min_pulse_MPa,split";

void write_dataset_csv(const Dataset& dataset, std::ostream& out);
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);

// Throws LoadError naming the offending line.
Dataset read_dataset_csv(std::istream& in);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace micropump
