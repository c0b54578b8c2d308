#pragma once

#include <memory>

#include "gaitlab/common.hpp"
#include "gaitlab/gait_scheduler.hpp"
#include "gaitlab/quad_sim.hpp"
#include "gaitlab/robot_model.hpp"
#include "gaitlab/state_estimator.hpp"

namespace gaitlab {

/// Inputs available to a low-level controller at one 500 Hz control step.
struct ControlContext {
  const SimState* truth = nullptr;
  const RobotStateS* estimate = nullptr;
  const BetaL* beta_l = nullptr;
  const SchedulerState* scheduler = nullptr;
  Vec3 velocity_cmd = Vec3::Zero();
  double dt = 0.002;
};

/// Produces joint position targets q* for the 1 kHz PD loop.
class LocomotionController {
 public:
  virtual ~LocomotionController() = default;
  virtual Vec12 compute(const ControlContext& ctx) = 0;
  virtual std::unique_ptr<LocomotionController> clone() const = 0;
  virtual void reset() {}
};

struct ScriptedControllerConfig {
  double height_kp = 120.0;
  double height_kd = 16.0;
  double velocity_kp = 30.0;
  double max_accel = 3.0;
  double orientation_kp = 500.0;
  double orientation_kd = 35.0;
  double yaw_rate_kd = 10.0;
  double force_regularisation = 1e-4;
  /// Relative weight of moment rows in the force distribution.
  double moment_weight = 10.0;
  double friction = 0.5;
  double swing_kp = 80.0;
  double swing_kd = 4.0;
  double stance_damping = 0.3;
  double max_feedforward_duty = 0.8;
  double touchdown_probe = 0.03;
  /// Scale of the swing-leg inertia feedforward (0 disables it).
  double swing_inertia_ff = 1.0;
};

/// IK foot tracker for swing legs plus a base PD wrench distributed over stance legs
/// through their Jacobians. Uses simulator ground truth.
class ScriptedController : public LocomotionController {
 public:
  explicit ScriptedController(RobotModel model, ScriptedControllerConfig cfg = {});

  Vec12 compute(const ControlContext& ctx) override;
  std::unique_ptr<LocomotionController> clone() const override;
  void reset() override;

  /// Desired joint torques from the last call (before conversion to q*).
  const Vec12& desired_torque() const { return tau_des_; }
  /// World-frame stance forces from the last call; zero for swing legs.
  const std::array<Vec3, kNumLegs>& desired_forces() const { return f_des_; }

 private:
  RobotModel model_;
  ScriptedControllerConfig cfg_;
  Vec12 qd_des_prev_ = Vec12::Zero();
  std::array<bool, kNumLegs> has_prev_{};
  Vec12 tau_des_ = Vec12::Zero();
  std::array<Vec3, kNumLegs> f_des_{};
};

/// Target q* that makes the PD law reproduce `tau` at the current (q, qd).
Vec12 torque_to_position_target(const Vec12& tau, const Vec12& q, const Vec12& qd, const RobotModel& model);

}  // namespace gaitlab
