#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "gaitlab/locomotion.hpp"
#include "gaitlab/observations.hpp"
#include "gaitlab/ppo.hpp"
#include "gaitlab/randomization.hpp"
#include "gaitlab/rewards.hpp"

namespace gaitlab {

/// Joint targets as offsets around the IK solution of the reference footholds.
/// The action is held between set_action calls.
class PolicyController : public LocomotionController {
 public:
  explicit PolicyController(RobotModel model, double action_scale = 0.25, double action_clip = 2.0);

  void set_action(const VecX& action);
  const Vec12& action() const { return action_; }

  Vec12 compute(const ControlContext& ctx) override;
  std::unique_ptr<LocomotionController> clone() const override;
  void reset() override { action_.setZero(); }

 private:
  RobotModel model_;
  double scale_;
  double clip_;
  Vec12 action_ = Vec12::Zero();
};

/// IK joint angles reaching the beta_L foot references from the current base pose.
Vec12 reference_joint_positions(const SimState& s, const BetaL& beta, const RobotModel& model);

struct StepResult {
  VecX obs;
  double reward = 0.0;
  bool terminal = false;
  bool truncated = false;
  /// Environment-specific sub-terms, named by Env::term_names().
  std::vector<double> terms;
};

class Env {
 public:
  virtual ~Env() = default;
  virtual int obs_dim() const = 0;
  virtual int act_dim() const = 0;
  virtual std::vector<std::string> term_names() const { return {}; }
  virtual VecX reset(std::uint64_t seed) = 0;
  virtual StepResult step(const VecX& action) = 0;
};

using EnvFactory = std::function<std::unique_ptr<Env>(int index)>;

/// One-step episodes with reward -(a - optimum)^2 and a constant observation.
class BanditEnv : public Env {
 public:
  explicit BanditEnv(double optimum = 0.7) : optimum_(optimum) {}
  int obs_dim() const override { return 1; }
  int act_dim() const override { return 1; }
  VecX reset(std::uint64_t) override { return VecX::Ones(1); }
  StepResult step(const VecX& action) override;
  double optimum() const { return optimum_; }

 private:
  double optimum_;
};

struct LocoEnvConfig {
  StackConfig stack;
  RandomizationConfig randomization;
  RewardConfigL reward;
  double episode_duration = 5.0;
  double action_scale = 0.25;
  double action_clip = 2.0;
};

/// pi_L environment on flat ground; one step is one 100 Hz selection period.
class LocoEnv : public Env {
 public:
  explicit LocoEnv(LocoEnvConfig cfg = {});
  int obs_dim() const override { return kObsLSize; }
  int act_dim() const override { return kNumJoints; }
  std::vector<std::string> term_names() const override { return {"r_eta", "r_v", "r_f", "r_stab"}; }
  VecX reset(std::uint64_t seed) override;
  StepResult step(const VecX& action) override;

  const LocomotionStack& stack() const { return *stack_; }
  const EpisodeConfig& episode() const { return episode_; }

 private:
  VecX observe() const;

  LocoEnvConfig cfg_;
  std::shared_ptr<const Terrain> terrain_;
  std::unique_ptr<LocomotionStack> stack_;
  EpisodeConfig episode_;
  Vec12 qd_prev_ = Vec12::Zero();
  Vec12 qd_prev2_ = Vec12::Zero();
  Vec12 q_star_prev_ = Vec12::Zero();
  int steps_ = 0;
};

/// o_L for a running stack with foot references in the base heading frame.
ObservationL locomotion_observation(const LocomotionStack& stack);

using ControllerFactory = std::function<std::unique_ptr<LocomotionController>(const RobotModel&)>;

struct GaitEnvConfig {
  StackConfig stack;
  RandomizationConfig randomization;
  std::vector<int> terrain_levels{0, 1, 2, 3};
  std::uint64_t terrain_seed = 7;
  double episode_duration = 10.0;
  /// Low-level controller under the gait head; the scripted tracker when empty.
  ControllerFactory controller;
};

/// pi_G environment: a one-dimensional gait action on top of a fixed low-level controller.
class GaitEnv : public Env {
 public:
  explicit GaitEnv(GaitEnvConfig cfg = {});
  int obs_dim() const override { return kObsGSize; }
  int act_dim() const override { return 1; }
  std::vector<std::string> term_names() const override {
    return {"r_v", "r_stand", "r_smooth", "psi_cot", "psi_tau", "psi_c", "psi_w"};
  }
  VecX reset(std::uint64_t seed) override;
  StepResult step(const VecX& action) override;

 private:
  VecX observe(const Vec3& accel_cmd) const;

  GaitEnvConfig cfg_;
  std::vector<std::shared_ptr<const Terrain>> terrains_;
  std::unique_ptr<LocomotionStack> stack_;
  EpisodeConfig episode_;
  double gait_prev_raw_ = 0.0;
  GaitId gait_prev_ = GaitId::Stand;
  Vec3 cmd_prev_ = Vec3::Zero();
  int steps_ = 0;
};

struct IterationLog {
  int iteration = 0;
  double mean_reward = 0.0;
  double mean_episode_return = 0.0;
  int episodes = 0;
  std::vector<double> term_means;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
  double mean_std = 0.0;
  double elapsed = 0.0;
};

struct TrainConfig {
  PpoHypers hypers;
  int iterations = 500;
  std::uint64_t seed = 0;
  bool normalize_obs = true;
  /// Divides rewards by the running std of the discounted return.
  bool scale_rewards = true;
  std::string log_csv;
  std::string checkpoint_path;
  int checkpoint_every = 50;
  std::string kind = "policy";
  std::function<void(const IterationLog&)> on_iteration;
};

struct TrainResult {
  ActorCritic net;
  RunningNormalizer obs_norm;
  std::vector<IterationLog> log;
  std::vector<std::string> term_names;
  bool diverged = false;
  std::string divergence_message;
};

TrainResult train(const EnvFactory& make_env, const TrainConfig& cfg);

void write_training_log_header(std::ostream& out, const std::vector<std::string>& term_names);
void write_training_log_row(std::ostream& out, const IterationLog& row);

struct Checkpoint {
  int version = 1;
  std::string kind;
  int iteration = 0;
  ActorCritic net;
  RunningNormalizer obs_norm;
  PpoHypers hypers;
};

nlohmann::json to_json(const Checkpoint& c);
Checkpoint checkpoint_from_json(const nlohmann::json& j);
void save_checkpoint(const std::string& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::string& path);

/// Deterministic action (policy mean) for a raw observation.
VecX policy_action(const ActorCritic& net, const RunningNormalizer& norm, const VecX& obs);

/// Sets the held action of a PolicyController-driven stack from its current observation.
void drive_locomotion_policy(LocomotionStack& stack, const ActorCritic& net, const RunningNormalizer& norm);

}  // namespace gaitlab
