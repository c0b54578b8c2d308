#pragma once

#include <nlohmann/json.hpp>

#include "gaitlab/common.hpp"
#include "gaitlab/gait_scheduler.hpp"

namespace gaitlab {

/// Geometry, mass and actuation limits of the simulated quadruped.
/// Defaults are A1-like values, not measured ground truth.
struct RobotModel {
  double base_mass = 12.0;
  Mat3 base_inertia = Vec3(0.07, 0.15, 0.18).asDiagonal();
  /// Abduction joint positions in the base frame, FL, FR, RL, RR.
  FootArray hip_offsets{Vec3(0.183, 0.047, 0.0), Vec3(0.183, -0.047, 0.0),
                        Vec3(-0.183, 0.047, 0.0), Vec3(-0.183, -0.047, 0.0)};
  double hip_length = 0.0838;
  double thigh_length = 0.20;
  double calf_length = 0.20;
  Vec12 torque_limit = Vec12::Constant(33.5);
  double nominal_height = 0.28;
  double hip_height = 0.25;
  double kp = 25.0;
  double kd = 1.0;
  /// Lumped rotor + link inertia about each joint axis.
  double leg_inertia = 0.05;

  /// +1 for left legs, -1 for right legs.
  static double side(int leg) { return (leg % 2 == 0) ? 1.0 : -1.0; }
  /// Foot position in the base frame when standing at the nominal height.
  Vec3 nominal_foot_base(int leg) const;
  FootArray nominal_feet_base() const;
  Vec12 nominal_joint_positions() const;
  /// Scheduler settings consistent with this model's geometry.
  SchedulerConfig scheduler_config() const;
};

/// Throws InvalidModel on m <= 0, non-positive torque limits or negative gains.
void validate(const RobotModel& model);
RobotModel robot_model_from_json(const nlohmann::json& doc, RobotModel base = {});

/// Abduction-hip-knee forward kinematics: foot position in the hip (abduction joint) frame.
Vec3 leg_fk(const Vec3& q_leg, const RobotModel& model, int leg);
/// d(foot in hip frame)/d(q_leg).
Mat3 leg_jacobian(const Vec3& q_leg, const RobotModel& model, int leg);

struct LegIkResult {
  Vec3 q = Vec3::Zero();
  bool reachable = true;
};

/// Analytic inverse kinematics with the knee-backward branch (knee angle <= 0).
/// Targets outside the workspace are projected onto it and flagged.
LegIkResult leg_ik(const Vec3& foot_hip, const RobotModel& model, int leg);

inline Vec3 leg_joints(const Vec12& q, int leg) { return q.segment<3>(3 * leg); }

}  // namespace gaitlab
