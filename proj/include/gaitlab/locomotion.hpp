#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include "gaitlab/biometrics.hpp"
#include "gaitlab/controller.hpp"
#include "gaitlab/gait_scheduler.hpp"
#include "gaitlab/quad_sim.hpp"
#include "gaitlab/sensors.hpp"
#include "gaitlab/state_estimator.hpp"

namespace gaitlab {

struct StackConfig {
  RobotModel model;
  SimConfig sim;
  GaitTable gaits = GaitTable::defaults();
  NoiseConfig noise;
  EstimatorConfig estimator;
  /// Physics steps per controller call (1 kHz / 500 Hz).
  int control_decimation = 2;
  /// Physics steps per selection step (1 kHz / 100 Hz).
  int selection_decimation = 10;
  bool energy_absolute = false;
  double stride_window = 3.0;
  /// CoT is left undefined below this commanded speed.
  double min_cot_speed = 0.05;
};

/// Aggregates over one 100 Hz selection step.
struct SelectionStep {
  MetricsSample metrics;
  /// Window-mean of [v_x, v_y, omega_z] in the heading frame.
  Vec3 velocity = Vec3::Zero();
  /// Window-mean planar speed error |v_xy - v_cmd_xy|.
  double planar_error = 0.0;
  GaitId gait = GaitId::Stand;
  bool transitioning = false;
};

/// Simulator, gait scheduler, state estimator and low-level controller running at
/// 1 kHz / 500 Hz. Copying the stack clones every component, including the controller.
class LocomotionStack {
 public:
  LocomotionStack(StackConfig cfg, std::shared_ptr<const Terrain> terrain,
                  std::unique_ptr<LocomotionController> controller, GaitId initial, std::uint64_t seed,
                  const SimState* initial_state = nullptr);
  LocomotionStack(const LocomotionStack& other);
  LocomotionStack& operator=(const LocomotionStack& other);
  LocomotionStack(LocomotionStack&&) noexcept = default;
  LocomotionStack& operator=(LocomotionStack&&) noexcept = default;
  ~LocomotionStack() = default;

  void set_command(const Command& cmd) { cmd_ = cmd; }
  const Command& command() const { return cmd_; }

  /// One controller period (`control_decimation` physics steps).
  void control_step();
  /// One selection period; throws SimulationDiverged on divergence.
  SelectionStep selection_step();

  /// Base below 0.12 m above ground, roll or pitch above 1 rad.
  bool fallen() const;

  const Simulator& sim() const { return sim_; }
  Simulator& sim() { return sim_; }
  const GaitScheduler& scheduler() const { return scheduler_; }
  const StateEstimator& estimator() const { return estimator_; }
  const BetaL& beta_l() const { return beta_l_; }
  const BetaG& beta_g() const { return beta_g_; }
  const Vec12& q_star() const { return q_star_; }
  const StackConfig& config() const { return cfg_; }
  LocomotionController& controller() { return *controller_; }
  const std::vector<std::vector<double>>& touchdowns() const { return touchdowns_; }
  const EnergyAccumulator& energy() const { return energy_; }
  /// Tracking triple [v_x, v_y, omega_z] of the true state in the heading frame.
  Vec3 tracked_velocity() const;
  double time() const { return sim_.time(); }

 private:
  HeightFn height_fn() const;

  StackConfig cfg_;
  Simulator sim_;
  GaitScheduler scheduler_;
  StateEstimator estimator_;
  std::unique_ptr<LocomotionController> controller_;
  std::mt19937_64 rng_;
  Command cmd_;
  BetaL beta_l_;
  BetaG beta_g_;
  Vec12 q_star_ = Vec12::Zero();
  EnergyAccumulator energy_;
  std::vector<std::vector<double>> touchdowns_;
  ContactSet prev_contact_{};

  // Per-selection-window accumulators.
  double power_sum_ = 0.0;
  double tau_pct_sum_ = 0.0;
  int physics_count_ = 0;
  double contact_err_sum_ = 0.0;
  int control_count_ = 0;
  Vec3 velocity_sum_ = Vec3::Zero();
  double planar_err_sum_ = 0.0;
};

}  // namespace gaitlab
