#include "gaitlab/observations.hpp"

namespace gaitlab {

ObservationL build_obs_l(const BetaL& beta, const RobotStateS& s, const Vec3& velocity_cmd) {
  ObservationL o;
  o << beta.flatten(), s.flatten(), velocity_cmd;
  return o;
}

ObservationG build_obs_g(const RobotStateS& s, const BetaG& beta, const Vec3& velocity_cmd, const Vec3& accel_cmd,
                         double gait_prev) {
  ObservationG o;
  o << s.flatten(), beta.flatten(), velocity_cmd, accel_cmd, gait_prev;
  return o;
}

BetaL beta_l_from_obs(const VecX& obs) {
  if (obs.size() != kObsLSize) throw ContractViolation("beta_l_from_obs: expected a 69-scalar observation");
  BetaL b;
  for (size_t i = 0; i < kNumLegs; ++i) b.contact_ref[i] = obs[static_cast<Eigen::Index>(i)] > 0.5;
  b.px = obs.segment<4>(4);
  b.py = obs.segment<4>(8);
  b.pz = obs.segment<4>(12);
  return b;
}

BetaL beta_l_relative(const BetaL& beta, const Vec3& base_position, double yaw) {
  const Mat3 rt = yaw_rotation(yaw).transpose();
  BetaL out = beta;
  for (int i = 0; i < kNumLegs; ++i) {
    const Vec3 r = rt * (beta.foot(i) - base_position);
    out.px[i] = r.x();
    out.py[i] = r.y();
    out.pz[i] = r.z();
  }
  return out;
}

Vec3 command_acceleration(const Vec3& velocity_cmd, const Vec3& velocity_cmd_prev, double dt) {
  if (!(dt > 0.0)) throw InvalidInput("command_acceleration: dt must be positive");
  return (velocity_cmd - velocity_cmd_prev) / dt;
}

}  // namespace gaitlab
