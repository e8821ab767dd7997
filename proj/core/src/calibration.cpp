#include "micropump/calibration.hpp"

#include <cmath>
#include <utility>

#include "micropump/errors.hpp"
#include "micropump/random.hpp"

namespace micropump {

SimulatedDispenser::SimulatedDispenser(PumpParameters params, CorrectionTable truth, FlowSign sign,
                                       double relative_noise, std::uint64_t seed, double period_s)
    : params_(params),
      truth_(std::move(truth)),
      sign_(sign),
      relative_noise_(relative_noise),
      seed_(seed),
      period_s_(period_s) {
  params_.validate();
  if (relative_noise_ < 0.0) throw DomainError("dispenser noise must be non-negative");
  if (!(period_s_ > 0.0)) throw DomainError("dispenser period must be positive");
}

double SimulatedDispenser::measured_volume_ml(double back_pressure_mpa, double minutes) const {
  if (!(minutes > 0.0)) throw DomainError("run time must be positive");
  const auto [f, z] = truth_.lookup(back_pressure_mpa);
  const double flow = check_valve_flow(pressure_correction(z, back_pressure_mpa, params_.p_max_mpa),
                                       flow_correction(f, sign_), params_.pump_volume_ul, period_s_);
  double noise = 0.0;
  if (relative_noise_ > 0.0) {
    Rng rng(derive_seed(seed_, {double_bits(back_pressure_mpa), double_bits(minutes)}));
    noise = relative_noise_ * rng.normal();
  }
  return flow * minutes * (1.0 + noise);
}

void CalibrationSettings::validate() const {
  if (!(low_pressure_mpa > 0.0)) throw DomainError("low calibration pressure must be positive");
  if (!(run_minutes > 0.0)) throw DomainError("calibration run time must be positive");
  if (!(band_position > 0.0 && band_position <= 1.0)) {
    throw DomainError("band position must lie in (0, 1]");
  }
}

CalibrationResult calibrate_corrections(const SimulatedDispenser& dispenser,
                                        const CorrectionTable& layout,
                                        const CalibrationSettings& settings) {
  settings.validate();
  const auto& params = dispenser.params();
  const double nominal = check_valve_flow(1.0, 1.0, params.pump_volume_ul, dispenser.period_s());
  auto average_flow = [&](double pressure, double& volume) {
    volume = dispenser.measured_volume_ml(pressure, settings.run_minutes);
    if (!std::isfinite(volume) || !(volume > 0.0)) {
      throw CalibrationError("dispenser reported a non-positive volume at " + std::to_string(pressure) +
                             " MPa");
    }
    return volume / settings.run_minutes;
  };
  auto resolve = [&](double raw) { return settings.round_to_integer ? std::round(raw) : raw; };

  double low_volume = 0.0;
  const double lambda_f = average_flow(settings.low_pressure_mpa, low_volume) / nominal;
  const double raw_f = static_cast<int>(dispenser.sign()) * (lambda_f - 1.0) * 100.0;
  if (raw_f < -0.5) {
    throw CalibrationError("low-pressure run implies a negative flow correction; check the flow sign");
  }
  const double f = resolve(std::max(raw_f, 0.0));
  const std::size_t low_band = layout.band_index(settings.low_pressure_mpa);

  CalibrationResult result;
  std::vector<CorrectionBand> bands;
  for (std::size_t i = 0; i < layout.bands().size(); ++i) {
    const auto& band = layout.bands()[i];
    BandEstimate estimate;
    double z = 0.0;
    if (i == low_band) {
      estimate = {settings.low_pressure_mpa, low_volume, raw_f, 0.0};
    } else {
      const double pressure = band.lo_mpa + settings.band_position * (band.hi_mpa - band.lo_mpa);
      double volume = 0.0;
      const double lambda_z = average_flow(pressure, volume) / (nominal * lambda_f);
      const double raw_z = (lambda_z - 1.0) * 100.0 * params.p_max_mpa / pressure;
      estimate = {pressure, volume, raw_f, raw_z};
      z = resolve(raw_z);
    }
    result.estimates.push_back(estimate);
    bands.push_back({band.lo_mpa, band.hi_mpa, f, z});
  }
  result.recovered = CorrectionTable(std::move(bands));
  return result;
}

}  // namespace micropump
