#pragma once

#include <memory>
#include <optional>

#include <nlohmann/json.hpp>

#include "gaitlab/common.hpp"
#include "gaitlab/gait_scheduler.hpp"
#include "gaitlab/robot_model.hpp"
#include "gaitlab/terrain.hpp"

namespace gaitlab {

/// Penalty contact and integration constants.
struct SimConfig {
  Vec3 gravity{0.0, 0.0, -kGravity};
  double dt = 1e-3;
  double contact_stiffness = 1e4;     // k_n, N/m
  double contact_damping = 300.0;     // c_n, N s/m
  double tangential_stiffness = 1e4;  // stiction spring, N/m
  double tangential_damping = 150.0;  // N s/m
  double contact_threshold = 1.0;     // N
  /// Overrides the terrain's friction coefficient when set.
  std::optional<double> friction;
};

SimConfig sim_config_from_json(const nlohmann::json& doc, SimConfig base = {});

struct SimState {
  Vec3 position = Vec3::Zero();
  Mat3 rotation = Mat3::Identity();
  /// World frame.
  Vec3 linear_velocity = Vec3::Zero();
  /// Base frame (what a gyro reads).
  Vec3 angular_velocity = Vec3::Zero();
  Vec12 q = Vec12::Zero();
  Vec12 qd = Vec12::Zero();
  Vec12 tau = Vec12::Zero();

  FootArray feet{Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
  FootArray foot_velocities{Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
  /// Total ground force on each foot, world frame.
  FootArray foot_forces{Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
  ContactSet contact{};
  Vec4 f_grf = Vec4::Zero();

  /// Stiction anchor points; valid while `anchored[i]`.
  std::array<Vec2, kNumLegs> anchors{Vec2::Zero(), Vec2::Zero(), Vec2::Zero(), Vec2::Zero()};
  std::array<bool, kNumLegs> anchored{};

  /// World-frame base acceleration over the last step (accelerometer source).
  Vec3 linear_acceleration = Vec3::Zero();
  double time = 0.0;

  Vec3 world_angular_velocity() const { return rotation * angular_velocity; }
  BodyState body_state() const;
};

/// tau* = Kp (q* - q) - Kd qd, clamped to the torque limits.
Vec12 pd_torques(const Vec12& q_star, const Vec12& q, const Vec12& qd, const RobotModel& model);

/// Recomputes foot positions and velocities from the base and joint states.
void update_foot_kinematics(SimState& state, const RobotModel& model);

struct ContactForces {
  FootArray force{Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
  Vec4 normal = Vec4::Zero();
  std::array<Vec2, kNumLegs> anchors{};
  std::array<bool, kNumLegs> anchored{};
};

/// Spring-damper normal force with a stiction spring capped by the friction cone.
/// Foot positions and velocities in `state` must be current.
ContactForces contact_forces(const SimState& state, const Terrain& terrain, const SimConfig& cfg);

/// One semi-implicit Euler step of the base and joint dynamics under `tau`.
/// Throws SimulationDiverged if the result is not finite.
SimState step_dynamics(const SimState& state, const Vec12& tau, double dt, const RobotModel& model,
                       const Terrain& terrain, const SimConfig& cfg);

/// Robot at rest in the nominal pose with its feet touching the terrain below (x, y).
SimState standing_state(const RobotModel& model, const Terrain& terrain, double x = 0.0,
                        double y = 0.0, double yaw = 0.0);

/// PD targets whose steady state under an evenly shared static load is the nominal pose
/// (q* = q_nom - J^T f / Kp).
Vec12 stand_targets(const RobotModel& model, double g = kGravity);

/// Value-semantic simulator: copying it clones the whole simulation.
class Simulator {
 public:
  Simulator(RobotModel model, std::shared_ptr<const Terrain> terrain, SimConfig cfg = {});
  Simulator(RobotModel model, std::shared_ptr<const Terrain> terrain, SimConfig cfg,
            const SimState& initial);

  /// Applies the PD law towards q* and advances one physics step.
  void step(const Vec12& q_star);
  void step_torque(const Vec12& tau);

  const SimState& state() const { return state_; }
  SimState& mutable_state() { return state_; }
  const RobotModel& model() const { return model_; }
  const Terrain& terrain() const { return *terrain_; }
  std::shared_ptr<const Terrain> terrain_ptr() const { return terrain_; }
  const SimConfig& config() const { return cfg_; }
  double time() const { return state_.time; }

 private:
  RobotModel model_;
  std::shared_ptr<const Terrain> terrain_;
  SimConfig cfg_;
  SimState state_;
};

/// Base mechanical energy: 1/2 m |v|^2 + 1/2 w^T I w + m g z.
double base_energy(const SimState& state, const RobotModel& model, double g = kGravity);

}  // namespace gaitlab
