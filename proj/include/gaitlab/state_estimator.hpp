#pragma once

#include "gaitlab/common.hpp"
#include "gaitlab/quad_sim.hpp"
#include "gaitlab/robot_model.hpp"
#include "gaitlab/sensors.hpp"

namespace gaitlab {

/// The 50-scalar robot state s.
///
/// `gravity_axis` is R_B^T e_z and `v_b` the base linear velocity expressed in the base frame.
struct RobotStateS {
  Vec3 gravity_axis = Vec3::UnitZ();
  Vec12 q = Vec12::Zero();
  Vec3 omega = Vec3::Zero();
  Vec12 qd = Vec12::Zero();
  Vec3 v_b = Vec3::Zero();
  double z = 0.0;
  Vec12 tau = Vec12::Zero();
  ContactSet contact{};

  static constexpr int kSize = 50;
  Eigen::Matrix<double, kSize, 1> flatten() const;
};

/// Ground-truth s straight from the simulator (no estimation error).
RobotStateS true_robot_state(const SimState& state, double contact_threshold = 1.0);

struct EstimatorConfig {
  double orientation_gain = 0.02;
  /// Tilt correction only while | |a| - g | stays below this fraction of g.
  double accel_gate = 0.5;
  double odometry_blend = 0.98;
  double contact_threshold = 1.0;
  double gravity = kGravity;
};

struct EstimatorState {
  Mat3 rotation = Mat3::Identity();
  /// World frame.
  Vec3 velocity = Vec3::Zero();
  double z = 0.0;
};

/// Complementary-filter orientation plus leg-odometry velocity and kinematic height.
EstimatorState se_step(const EstimatorState& est, const SensorVector& sigma, double dt,
                       const RobotModel& model, const EstimatorConfig& cfg, ContactSet* contact = nullptr);

RobotStateS se_output(const EstimatorState& est, const SensorVector& sigma, const EstimatorConfig& cfg);

class StateEstimator {
 public:
  StateEstimator(RobotModel model, EstimatorConfig cfg = {});

  /// Starts from a known pose (typically the simulator's initial state).
  void reset(const SimState& initial);
  RobotStateS update(const SensorVector& sigma, double dt);

  const EstimatorState& estimate() const { return est_; }
  const RobotStateS& output() const { return out_; }

 private:
  RobotModel model_;
  EstimatorConfig cfg_;
  EstimatorState est_;
  RobotStateS out_;
};

}  // namespace gaitlab
