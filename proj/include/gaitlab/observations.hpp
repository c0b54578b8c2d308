#pragma once

#include "gaitlab/gait_scheduler.hpp"
#include "gaitlab/state_estimator.hpp"

namespace gaitlab {

inline constexpr int kObsLSize = BetaL::kSize + RobotStateS::kSize + 3;
inline constexpr int kObsGSize = RobotStateS::kSize + BetaG::kSize + 3 + 3 + 1;

using ObservationL = Eigen::Matrix<double, kObsLSize, 1>;
using ObservationG = Eigen::Matrix<double, kObsGSize, 1>;

/// beta_L || s || v_cmd.
ObservationL build_obs_l(const BetaL& beta, const RobotStateS& s, const Vec3& velocity_cmd);
/// s || beta_G || v_cmd || a_cmd || gait_prev (raw previous action).
ObservationG build_obs_g(const RobotStateS& s, const BetaG& beta, const Vec3& velocity_cmd, const Vec3& accel_cmd,
                         double gait_prev);

/// Inverse of the beta_L slice of an o_L vector.
BetaL beta_l_from_obs(const VecX& obs);

/// Foot references re-expressed in the heading frame anchored at the base position.
BetaL beta_l_relative(const BetaL& beta, const Vec3& base_position, double yaw);

/// Finite difference of the velocity command over one selection step.
Vec3 command_acceleration(const Vec3& velocity_cmd, const Vec3& velocity_cmd_prev, double dt);

}  // namespace gaitlab
