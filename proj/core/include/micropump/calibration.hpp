#pragma once

// Replays the correction-constant calibration against a simulated
// dispenser: run the pump for a fixed time at a controlled back pressure,
// average the collected volume over the run and invert the check-valve flow
// model for F (low back pressure) and Z (one run per high-pressure band).

#include <cstdint>
#include <vector>

#include "micropump/pump_model.hpp"

namespace micropump {

// Collects fluid with flow given by the check-valve model under a known
// correction table, with multiplicative measurement noise on the volume.
class SimulatedDispenser {
 public:
  SimulatedDispenser(PumpParameters params, CorrectionTable truth, FlowSign sign,
                     double relative_noise, std::uint64_t seed, double period_s = 10.0);

  // Volume (mL) collected over `minutes` at the given back pressure.
  double measured_volume_ml(double back_pressure_mpa, double minutes) const;

  const PumpParameters& params() const noexcept { return params_; }
  FlowSign sign() const noexcept { return sign_; }
  double period_s() const noexcept { return period_s_; }

 private:
  PumpParameters params_;
  CorrectionTable truth_;
  FlowSign sign_;
  double relative_noise_;
  std::uint64_t seed_;
  double period_s_;
};

struct CalibrationSettings {
  double low_pressure_mpa = 2.0;
  double run_minutes = 10.0;
  // Where inside each high-pressure band the run is made, as a fraction of
  // the band width.
  double band_position = 0.6;
  // Report constants at integer resolution, like the reference table.
  bool round_to_integer = true;

  void validate() const;
};

struct BandEstimate {
  double run_pressure_mpa = 0.0;
  double volume_ml = 0.0;
  double raw_f = 0.0;
  double raw_z = 0.0;
};

struct CalibrationResult {
  CorrectionTable recovered;
  std::vector<BandEstimate> estimates;  // one per band
};

// `layout` supplies the band boundaries. The band holding the low-pressure
// run gets Z = 0. Throws CalibrationError on non-physical readings.
CalibrationResult calibrate_corrections(const SimulatedDispenser& dispenser,
                                        const CorrectionTable& layout,
                                        const CalibrationSettings& settings = {});

}  // namespace micropump
