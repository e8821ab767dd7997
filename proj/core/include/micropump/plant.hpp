#pragma once

// Synthetic stand-in for the physical pump rig. It defines a latent optimal
// overlap angle for every operating point and the pressure drop measured at
// the shifting point for any applied angle:
//
//   pulse(angle) = rho(x) + kappa (P + P0) exp(-angle / tau)
//                 + gamma ((angle - theta*(x)) / 45)^2 + noise
//
//   theta*(x) = theta0 + a g(P / P_max) + b omega / omega_ref
//               + c Q / Q_ref + d mu / mu_ref
//
// g is a logistic step in pressure rescaled to g(0) = 0, g(1) = 1 (linear
// when knee_width is 0). The constants are a synthetic calibration chosen so
// that no-overlap, fixed-30-degree and tuned-angle pressure drops fall in
// the ranges observed on the real device; they are not physics.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "micropump/pump_model.hpp"

namespace micropump {

struct PlantModel {
  double residual_lo = 0.15;  // MPa, per-point floor drawn from [lo, hi]
  double residual_hi = 0.25;
  double severity = 0.35;         // kappa, pulse per MPa with no overlap
  double pressure_offset = 20.0;  // P0, MPa
  double decay = 2.5;             // tau, degrees
  double mistuning = 6.5;         // gamma, MPa
  double theta0 = 18.0;
  double coef_pressure = 18.0;
  double coef_speed = 1.0;
  double coef_flow = 1.0;
  double coef_viscosity = 1.0;
  double pressure_knee = 0.5;  // as a fraction of p_max
  double knee_width = 0.05;    // 0 selects a linear pressure response
  double p_max = 40.0;
  double omega_ref = 5000.0 / (7.917 * 2.0);  // plunger speed at 5 mL/min
  double flow_ref = 5.0;
  double mu_ref = 1.002;
  double noise_sd = 0.03;  // MPa
  std::uint64_t seed = 0;

  // Throws PlantConfigError.
  void validate() const;
};

inline constexpr double kSweepLo = 5.0;
inline constexpr double kSweepHi = 45.0;
inline constexpr double kMaxActuatedAngle = 45.0;

// Rescaled logistic response of the latent angle to pressure.
double pressure_response(const PlantModel& plant, double pressure_fraction);

// Throws PlantConfigError when the result leaves [5, 45] degrees.
double latent_optimal_angle(const PlantModel& plant, const OperatingPoint& point);

// Deterministic per-point residual drop in [residual_lo, residual_hi].
double residual_floor(const PlantModel& plant, const OperatingPoint& point);

// Noise-free pulse for explicit (P, theta*, rho).
double pulse_closed_form(const PlantModel& plant, double pressure_mpa, double optimal_angle,
                         double residual, double angle);

// Measured pulse, noise seeded by (plant seed, point, angle, trial). Clamped
// at zero. Throws DomainError for angles outside [0, 45].
double simulate_pulse(const PlantModel& plant, const OperatingPoint& point, double angle,
                      std::uint64_t trial = 0);

struct SweepConfig {
  double lo = kSweepLo;
  double hi = kSweepHi;
  double step = 1.0;

  void validate() const;
};

struct LabeledPoint {
  OperatingPoint point;
  double optimal_angle_deg = 0.0;
  double min_pulse_mpa = 0.0;
};

// Measures every grid angle once and labels the point with the angle of the
// smallest reading, ties going to the smaller angle.
LabeledPoint sweep_angle(const PlantModel& plant, const OperatingPoint& point,
                         const SweepConfig& sweep = {}, std::uint64_t trial = 0);

struct GridConfig {
  double flow_lo = 0.1;  // mL/min
  double flow_hi = 5.0;
  double pressure_lo = 1.0;  // MPa
  double pressure_hi = 40.0;
  double period_lo = 3.0;  // s
  double period_hi = 15.0;
  std::vector<std::string> fluids = {"water", "methanol", "acetonitrile"};
  std::size_t train_count = 400;
  std::size_t validation_count = 50;
  std::size_t test_count = 50;
  SweepConfig sweep;

  std::size_t total() const noexcept { return train_count + validation_count + test_count; }
  void validate(const PumpParameters& params) const;
};

struct Dataset {
  std::vector<LabeledPoint> train;
  std::vector<LabeledPoint> validation;
  std::vector<LabeledPoint> test;
};

// Feature rows and label angles of a set of labeled points.
Eigen::MatrixXd feature_rows(const std::vector<LabeledPoint>& points);
Eigen::VectorXd label_vector(const std::vector<LabeledPoint>& points);

// Latin-hypercube sample of pressure, set flow and period; fluids drawn
// uniformly; each point labeled by sweep_angle; split by a seeded shuffle.
Dataset generate_dataset(const PlantModel& plant, const GridConfig& grid, std::uint64_t seed,
                         const PumpParameters& params = {},
                         const CorrectionTable& table = CorrectionTable::reference(),
                         FlowSign sign = FlowSign::kPlus);

}  // namespace micropump
