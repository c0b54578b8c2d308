#pragma once

#include <random>

#include "gaitlab/common.hpp"
#include "gaitlab/quad_sim.hpp"

namespace gaitlab {

/// Proprioceptive sensor readings, flattened in the order omega, accel, q, qd, tau, f_grf.
struct SensorVector {
  Vec3 omega = Vec3::Zero();
  /// Specific force in the base frame; reads +g along the base z axis at rest.
  Vec3 accel = Vec3::Zero();
  Vec12 q = Vec12::Zero();
  Vec12 qd = Vec12::Zero();
  Vec12 tau = Vec12::Zero();
  Vec4 f_grf = Vec4::Zero();

  static constexpr int kSize = 46;
  Eigen::Matrix<double, kSize, 1> flatten() const;
};

/// Standard deviations of the additive Gaussian sensor noise.
struct NoiseConfig {
  bool enabled = false;
  double omega = 0.015;
  double accel = 0.015;
  double q = 0.005;
  double qd = 0.15;
  double tau = 1.0;
  double f_grf = 1.0;
};

SensorVector read_sensors(const SimState& state, const NoiseConfig& noise, std::mt19937_64& rng,
                          const Vec3& gravity = Vec3(0.0, 0.0, -kGravity));

}  // namespace gaitlab
