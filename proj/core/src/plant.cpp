#include "micropump/plant.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "micropump/errors.hpp"
#include "micropump/random.hpp"

namespace micropump {
namespace {

constexpr double kMistuningScale = 45.0;

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::uint64_t point_key(const OperatingPoint& point) {
  return derive_seed(double_bits(point.fluid.mu_cp),
                     {double_bits(point.back_pressure_mpa), double_bits(point.period_s),
                      double_bits(point.set_flow_ml_min)});
}

void plant_require(bool ok, const char* what) {
  if (!ok) throw PlantConfigError(what);
}

}  // namespace

void PlantModel::validate() const {
  plant_require(residual_lo > 0.0 && residual_hi >= residual_lo, "plant residual range must satisfy 0 < lo <= hi");
  plant_require(severity > 0.0 && decay > 0.0 && mistuning > 0.0,
                "plant severity, decay and mistuning must be positive");
  plant_require(pressure_offset >= 0.0, "plant pressure offset must be non-negative");
  plant_require(knee_width >= 0.0, "plant knee width must be non-negative");
  plant_require(p_max > 0.0 && omega_ref > 0.0 && flow_ref > 0.0 && mu_ref > 0.0,
                "plant reference values must be positive");
  plant_require(noise_sd >= 0.0, "plant noise must be non-negative");
  plant_require(std::isfinite(theta0) && std::isfinite(coef_pressure) && std::isfinite(coef_speed) &&
                    std::isfinite(coef_flow) && std::isfinite(coef_viscosity),
                "plant angle coefficients must be finite");
}

double pressure_response(const PlantModel& plant, double pressure_fraction) {
  if (plant.knee_width == 0.0) return pressure_fraction;
  const double lo = logistic((0.0 - plant.pressure_knee) / plant.knee_width);
  const double hi = logistic((1.0 - plant.pressure_knee) / plant.knee_width);
  return (logistic((pressure_fraction - plant.pressure_knee) / plant.knee_width) - lo) / (hi - lo);
}

double latent_optimal_angle(const PlantModel& plant, const OperatingPoint& point) {
  const double angle = plant.theta0 +
                       plant.coef_pressure * pressure_response(plant, point.back_pressure_mpa / plant.p_max) +
                       plant.coef_speed * point.omega_rev_min / plant.omega_ref +
                       plant.coef_flow * point.valve_flow_ml_min / plant.flow_ref +
                       plant.coef_viscosity * point.fluid.mu_cp / plant.mu_ref;
  if (!(angle >= kSweepLo && angle <= kSweepHi)) {
    throw PlantConfigError("latent optimal angle " + std::to_string(angle) +
                           " deg leaves the [5, 45] degree window");
  }
  return angle;
}

double residual_floor(const PlantModel& plant, const OperatingPoint& point) {
  Rng rng(derive_seed(plant.seed, {point_key(point), 0x7265736964ULL}));
  return rng.uniform(plant.residual_lo, plant.residual_hi);
}

double pulse_closed_form(const PlantModel& plant, double pressure_mpa, double optimal_angle,
                         double residual, double angle) {
  const double mis = (angle - optimal_angle) / kMistuningScale;
  return residual + plant.severity * (pressure_mpa + plant.pressure_offset) * std::exp(-angle / plant.decay) +
         plant.mistuning * mis * mis;
}

double simulate_pulse(const PlantModel& plant, const OperatingPoint& point, double angle,
                      std::uint64_t trial) {
  if (!(angle >= 0.0 && angle <= kMaxActuatedAngle)) {
    throw DomainError("applied overlap angle must lie in [0, 45] degrees");
  }
  const double clean = pulse_closed_form(plant, point.back_pressure_mpa,
                                         latent_optimal_angle(plant, point),
                                         residual_floor(plant, point), angle);
  double noise = 0.0;
  if (plant.noise_sd > 0.0) {
    Rng rng(derive_seed(plant.seed, {point_key(point), double_bits(angle), trial}));
    noise = plant.noise_sd * rng.normal();
  }
  return std::max(0.0, clean + noise);
}

void SweepConfig::validate() const {
  if (!(lo < hi)) throw DomainError("sweep needs lo < hi");
  if (!(step > 0.0)) throw DomainError("sweep step must be positive");
  if (lo < 0.0 || hi > kMaxActuatedAngle) throw DomainError("sweep window must lie in [0, 45] degrees");
}

LabeledPoint sweep_angle(const PlantModel& plant, const OperatingPoint& point, const SweepConfig& sweep,
                         std::uint64_t trial) {
  sweep.validate();
  LabeledPoint labeled{point, sweep.lo, 0.0};
  bool first = true;
  const auto steps = static_cast<long>(std::floor((sweep.hi - sweep.lo) / sweep.step + 1e-9));
  for (long i = 0; i <= steps; ++i) {
    const double angle = std::min(sweep.lo + static_cast<double>(i) * sweep.step, sweep.hi);
    const double pulse = simulate_pulse(plant, point, angle, trial);
    if (first || pulse < labeled.min_pulse_mpa) {
      labeled.optimal_angle_deg = angle;
      labeled.min_pulse_mpa = pulse;
      first = false;
    }
  }
  return labeled;
}

void GridConfig::validate(const PumpParameters& params) const {
  if (!(flow_lo > 0.0 && flow_lo <= flow_hi)) throw DomainError("grid flow range is invalid");
  if (!(pressure_lo > 0.0 && pressure_lo <= pressure_hi && pressure_hi <= params.p_max_mpa)) {
    throw DomainError("grid pressure range must lie in (0, p_max]");
  }
  if (!(period_lo > 0.0 && period_lo <= period_hi)) throw DomainError("grid period range is invalid");
  if (fluids.empty()) throw DomainError("grid needs at least one fluid");
  for (const auto& name : fluids) fluid_by_name(name);
  if (train_count < 1) throw DomainError("training split must be non-empty");
  sweep.validate();
}

Eigen::MatrixXd feature_rows(const std::vector<LabeledPoint>& points) {
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(points.size()), static_cast<Eigen::Index>(kFeatureCount));
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto f = points[i].point.features();
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
      rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = f[j];
    }
  }
  return rows;
}

Eigen::VectorXd label_vector(const std::vector<LabeledPoint>& points) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i) y[static_cast<Eigen::Index>(i)] = points[i].optimal_angle_deg;
  return y;
}

Dataset generate_dataset(const PlantModel& plant, const GridConfig& grid, std::uint64_t seed,
                         const PumpParameters& params, const CorrectionTable& table, FlowSign sign) {
  plant.validate();
  grid.validate(params);
  const std::size_t n = grid.total();
  Rng rng(seed);

  auto latin = [&](double lo, double hi) {
    std::vector<std::size_t> strata(n);
    std::iota(strata.begin(), strata.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(strata));
    std::vector<double> values(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double u = (static_cast<double>(strata[i]) + rng.uniform()) / static_cast<double>(n);
      values[i] = lo + u * (hi - lo);
    }
    return values;
  };
  const auto pressures = latin(grid.pressure_lo, grid.pressure_hi);
  const auto flows = latin(grid.flow_lo, grid.flow_hi);
  const auto periods = latin(grid.period_lo, grid.period_hi);

  SettingLimits limits;
  limits.min_set_flow = std::min(limits.min_set_flow, grid.flow_lo);
  limits.max_set_flow = std::max(limits.max_set_flow, grid.flow_hi);
  limits.min_period = std::min(limits.min_period, grid.period_lo);
  limits.max_period = std::max(limits.max_period, grid.period_hi);

  std::vector<LabeledPoint> points;
  points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const FluidSpec fluid = fluid_by_name(grid.fluids[rng.index(grid.fluids.size())]);
    const auto point = make_operating_point(fluid, pressures[i], periods[i], flows[i], params, table,
                                            sign, limits);
    points.push_back(sweep_angle(plant, point, grid.sweep));
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(order));

  Dataset dataset;
  for (std::size_t i = 0; i < n; ++i) {
    auto& bucket = i < grid.train_count ? dataset.train
                   : i < grid.train_count + grid.validation_count ? dataset.validation
                                                                  : dataset.test;
    bucket.push_back(points[order[i]]);
  }
  return dataset;
}

}  // namespace micropump
