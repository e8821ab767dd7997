#include "micropump/pump_model.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "micropump/errors.hpp"

namespace micropump {
namespace {

constexpr double kUlPerSecondToMlPerMin = 60.0 / 1000.0;
constexpr double kMm3PerMl = 1000.0;

void require(bool ok, const char* what) {
  if (!ok) throw DomainError(what);
}

}  // namespace

FluidSpec water() { return {"water", 1.002}; }
FluidSpec methanol() { return {"methanol", 0.594}; }
FluidSpec acetonitrile() { return {"acetonitrile", 0.389}; }

const std::vector<FluidSpec>& builtin_fluids() {
  static const std::vector<FluidSpec> fluids = {water(), methanol(), acetonitrile()};
  return fluids;
}

FluidSpec fluid_by_name(std::string_view name) {
  for (const auto& fluid : builtin_fluids()) {
    if (fluid.name == name) return fluid;
  }
  throw DomainError("unknown fluid '" + std::string(name) + "'");
}

void PumpParameters::validate() const {
  require(pump_volume_ul > 0 && plunger_area_mm2 > 0 && step_displacement_mm > 0 &&
              rev_displacement_mm > 0 && steps_per_cycle > 0 && p_max_mpa > 0 &&
              motor_speed_max_steps_s > 0,
          "pump parameters must be strictly positive");
}

CorrectionTable::CorrectionTable(std::vector<CorrectionBand> bands) : bands_(std::move(bands)) {
  require(!bands_.empty(), "correction table needs at least one band");
  require(bands_.front().lo_mpa == 0.0, "correction table must start at 0 MPa");
  for (std::size_t i = 0; i < bands_.size(); ++i) {
    const auto& band = bands_[i];
    require(band.hi_mpa > band.lo_mpa, "correction band must have positive width");
    require(std::isfinite(band.f) && std::isfinite(band.z), "correction constants must be finite");
    if (i > 0) {
      require(band.lo_mpa == bands_[i - 1].hi_mpa,
              "correction bands must be contiguous and non-overlapping");
    }
  }
}

CorrectionTable CorrectionTable::reference() {
  static const double z_values[] = {0, 6, 7, 15, 18, 25, 31, 42};
  std::vector<CorrectionBand> bands;
  for (int i = 0; i < 8; ++i) {
    bands.push_back({5.0 * i, 5.0 * (i + 1), 13.0, z_values[i]});
  }
  return CorrectionTable(std::move(bands));
}

double CorrectionTable::upper_limit() const {
  require(!bands_.empty(), "empty correction table");
  return bands_.back().hi_mpa;
}

std::size_t CorrectionTable::band_index(double back_pressure_mpa) const {
  require(!bands_.empty(), "empty correction table");
  require(back_pressure_mpa >= 0.0 && back_pressure_mpa <= upper_limit(),
          "back pressure outside the correction table range");
  for (std::size_t i = 0; i < bands_.size(); ++i) {
    if (back_pressure_mpa < bands_[i].hi_mpa) return i;
  }
  return bands_.size() - 1;
}

Corrections CorrectionTable::lookup(double back_pressure_mpa) const {
  const auto& band = bands_[band_index(back_pressure_mpa)];
  return {band.f, band.z};
}

double overlap_time(double period_s, double overlap_angle_deg) {
  require(period_s > 0.0, "period must be positive");
  require(overlap_angle_deg >= 0.0 && overlap_angle_deg <= 360.0,
          "overlap angle must lie in [0, 360] degrees");
  return period_s * overlap_angle_deg / 360.0;
}

double plunger_speed(double set_flow_ml_min, const PumpParameters& params) {
  require(set_flow_ml_min > 0.0, "set flow must be positive");
  params.validate();
  return set_flow_ml_min * kMm3PerMl / (params.plunger_area_mm2 * params.rev_displacement_mm);
}

double pressure_correction(double z, double pressure_mpa, double p_max_mpa) {
  require(p_max_mpa > 0.0, "maximum pressure must be positive");
  require(pressure_mpa >= 0.0 && pressure_mpa <= p_max_mpa,
          "pressure must lie in [0, p_max]");
  return 1.0 + (z / 100.0) * (pressure_mpa / p_max_mpa);
}

double flow_correction(double f, FlowSign sign) {
  require(f >= 0.0, "flow correction constant must be non-negative");
  const double lambda = 1.0 + static_cast<int>(sign) * f / 100.0;
  require(lambda > 0.0, "flow correction coefficient must stay positive");
  return lambda;
}

double check_valve_flow(double lambda_z, double lambda_f, double pump_volume_ul,
                        double period_s) {
  require(period_s > 0.0, "period must be positive");
  require(lambda_z > 0.0 && lambda_f > 0.0 && pump_volume_ul > 0.0,
          "check valve flow inputs must be positive");
  const double ul_per_s = 2.0 * lambda_z * lambda_f * pump_volume_ul / period_s;
  return ul_per_s * kUlPerSecondToMlPerMin;
}

Corrections lookup_corrections(const CorrectionTable& table, double back_pressure_mpa) {
  return table.lookup(back_pressure_mpa);
}

OperatingPoint make_operating_point(const FluidSpec& fluid, double back_pressure_mpa,
                                    double period_s, double set_flow_ml_min,
                                    const PumpParameters& params,
                                    const CorrectionTable& table, FlowSign sign,
                                    const SettingLimits& limits) {
  params.validate();
  require(fluid.mu_cp > 0.0, "viscosity must be positive");
  require(back_pressure_mpa > 0.0 && back_pressure_mpa <= params.p_max_mpa,
          "back pressure must lie in (0, p_max]");
  require(set_flow_ml_min >= limits.min_set_flow && set_flow_ml_min <= limits.max_set_flow,
          "set flow outside the accepted range");
  require(period_s >= limits.min_period && period_s <= limits.max_period,
          "period outside the accepted range");

  const auto [f, z] = table.lookup(back_pressure_mpa);
  const double lambda_z = pressure_correction(z, back_pressure_mpa, params.p_max_mpa);
  const double lambda_f = flow_correction(f, sign);

  OperatingPoint point;
  point.fluid = fluid;
  point.back_pressure_mpa = back_pressure_mpa;
  point.period_s = period_s;
  point.set_flow_ml_min = set_flow_ml_min;
  point.omega_rev_min = plunger_speed(set_flow_ml_min, params);
  point.valve_flow_ml_min = check_valve_flow(lambda_z, lambda_f, params.pump_volume_ul, period_s);
  return point;
}

}  // namespace micropump
