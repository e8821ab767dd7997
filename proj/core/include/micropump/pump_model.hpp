#pragma once

// Flow model of the parallel plunger pump: overlap timing, plunger speed,
// check-valve flow and the pressure/flow correction coefficients that turn
// experiment settings into the four network input features.
//
// Units: mm, mm^2, mm^3 (= uL), s, MPa and degrees internally. Set flows and
// valve flows are exchanged in mL/min and plunger speed in rev/min.
//
// The correction constants F and Z are tabulated with a flow unit in the
// original calibration sheet, but both enter the coefficients below as
// percentages; they are treated as dimensionless here.

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace micropump {

inline constexpr std::size_t kFeatureCount = 4;

// Feature order: viscosity (cP), working pressure (MPa),
// plunger speed (rev/min), check-valve flow (mL/min).
using Features = std::array<double, kFeatureCount>;

inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "mu_cP", "back_pressure_MPa", "omega_rev_min", "valve_flow_mL_min"};

struct FluidSpec {
  std::string name;
  double mu_cp = 0.0;  // dynamic viscosity at 20 C
};

FluidSpec water();
FluidSpec methanol();
FluidSpec acetonitrile();
const std::vector<FluidSpec>& builtin_fluids();
// Throws DomainError for an unknown name.
FluidSpec fluid_by_name(std::string_view name);

struct PumpParameters {
  double pump_volume_ul = 125.0;  // A_p * V_m * S, the tabulated product
  double plunger_area_mm2 = 7.917;
  double step_displacement_mm = 0.01;
  double rev_displacement_mm = 2.0;
  double steps_per_cycle = 1580.0;
  double p_max_mpa = 40.0;
  double motor_speed_max_steps_s = 2000.0;

  void validate() const;
};

struct Corrections {
  double f = 0.0;
  double z = 0.0;
};

struct CorrectionBand {
  double lo_mpa = 0.0;  // inclusive
  double hi_mpa = 0.0;  // exclusive, except for the last band
  double f = 0.0;
  double z = 0.0;

  friend bool operator==(const CorrectionBand&, const CorrectionBand&) = default;
};

class CorrectionTable {
 public:
  CorrectionTable() = default;
  explicit CorrectionTable(std::vector<CorrectionBand> bands);

  // Eight 5-MPa bands over [0, 40] MPa: F = 13 throughout,
  // Z = 0, 6, 7, 15, 18, 25, 31, 42.
  static CorrectionTable reference();

  const std::vector<CorrectionBand>& bands() const noexcept { return bands_; }
  double upper_limit() const;

  // Band boundaries belong to the upper band; the top limit belongs to the
  // last band.
  Corrections lookup(double back_pressure_mpa) const;
  std::size_t band_index(double back_pressure_mpa) const;

  friend bool operator==(const CorrectionTable&, const CorrectionTable&) = default;

 private:
  std::vector<CorrectionBand> bands_;
};

enum class FlowSign : int { kPlus = 1, kMinus = -1 };

// t_op = T * angle / 360.
double overlap_time(double period_s, double overlap_angle_deg);

// Revolutions per minute needed to deliver set_flow with one plunger.
double plunger_speed(double set_flow_ml_min, const PumpParameters& params);

// lambda_z = 1 + (Z/100) (P / P_max)
double pressure_correction(double z, double pressure_mpa, double p_max_mpa);

// lambda_f = 1 +/- F/100
double flow_correction(double f, FlowSign sign);

// Q = 2 lambda_z lambda_f V / T, returned in mL/min.
double check_valve_flow(double lambda_z, double lambda_f, double pump_volume_ul,
                        double period_s);

Corrections lookup_corrections(const CorrectionTable& table, double back_pressure_mpa);

struct OperatingPoint {
  FluidSpec fluid;
  double back_pressure_mpa = 0.0;
  double period_s = 0.0;
  double set_flow_ml_min = 0.0;
  double omega_rev_min = 0.0;     // derived
  double valve_flow_ml_min = 0.0;  // derived

  Features features() const noexcept {
    return {fluid.mu_cp, back_pressure_mpa, omega_rev_min, valve_flow_ml_min};
  }
};

// Accepted raw-setting window for make_operating_point.
struct SettingLimits {
  double min_set_flow = 0.1;
  double max_set_flow = 10.0;
  double min_period = 3.0;
  double max_period = 15.0;
};

OperatingPoint make_operating_point(const FluidSpec& fluid, double back_pressure_mpa,
                                    double period_s, double set_flow_ml_min,
                                    const PumpParameters& params = {},
                                    const CorrectionTable& table = CorrectionTable::reference(),
                                    FlowSign sign = FlowSign::kPlus,
                                    const SettingLimits& limits = {});

}  // namespace micropump
