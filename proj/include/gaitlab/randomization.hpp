#pragma once

#include <nlohmann/json.hpp>

#include <random>
#include <vector>

#include "gaitlab/gait_scheduler.hpp"
#include "gaitlab/robot_model.hpp"
#include "gaitlab/sensors.hpp"

namespace gaitlab {

/// Clamped normal: max(lo, min(mean + scale N(0,1), hi)).
struct ClampedNormal {
  double mean = 0.0;
  double scale = 1.0;
  double lo = 0.0;
  double hi = 0.0;

  double sample(std::mt19937_64& rng) const;
};

struct UniformRange {
  double lo = 0.0;
  double hi = 1.0;

  double sample(std::mt19937_64& rng) const;
};

struct RandomizationConfig {
  NoiseConfig sensor_noise{true};
  ClampedNormal friction{0.6, 0.5, 0.4, 1.0};
  /// Additive base-mass offset, kg.
  ClampedNormal mass_offset{0.0, 1.0, -1.0, 3.0};
  ClampedNormal kp_scale{1.0, 0.05, 0.9, 1.1};
  ClampedNormal kd_scale{1.0, 0.05, 0.9, 1.1};
  UniformRange vx_cmd{0.0, 1.5};
  UniformRange wz_cmd{-1.0, 1.0};
  /// Continuous gait draw, rounded to the nearest gait index.
  UniformRange gait{0.0, 6.0};
  UniformRange t_acc{0.0, 0.5};
  /// Std of the per-joint initial configuration perturbation, rad.
  double q_init_std = 0.05;
  UniformRange segment_duration{1.0, 3.0};
  bool randomize_gait = true;
  GaitId fixed_gait = GaitId::Trot;
};

RandomizationConfig randomization_from_json(const nlohmann::json& j, RandomizationConfig base = {});

struct CommandSegment {
  double start = 0.0;
  double t_acc = 0.0;
  Vec3 velocity = Vec3::Zero();
  GaitId gait = GaitId::Stand;
};

/// Piecewise command: each segment ramps linearly from the previous target over t_acc.
class CommandSchedule {
 public:
  CommandSchedule() = default;
  explicit CommandSchedule(std::vector<CommandSegment> segments);

  Command at(double t) const;
  const std::vector<CommandSegment>& segments() const { return segments_; }

 private:
  std::vector<CommandSegment> segments_;
};

struct EpisodeConfig {
  double friction = 0.6;
  double mass_offset = 0.0;
  double kp_scale = 1.0;
  double kd_scale = 1.0;
  Vec12 q_init_offset = Vec12::Zero();
  CommandSchedule commands;
};

EpisodeConfig sample_episode_config(std::mt19937_64& rng, const RandomizationConfig& cfg, double duration);

/// Model with the episode's mass and gain draws applied.
RobotModel apply_episode(const RobotModel& model, const EpisodeConfig& ep);

}  // namespace gaitlab
