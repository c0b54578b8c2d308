#include "gaitlab/randomization.hpp"

#include <algorithm>
#include <cmath>

namespace gaitlab {

double ClampedNormal::sample(std::mt19937_64& rng) const {
  std::normal_distribution<double> n01(0.0, 1.0);
  return std::max(lo, std::min(mean + scale * n01(rng), hi));
}

double UniformRange::sample(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> u(lo, hi);
  return u(rng);
}

namespace {

ClampedNormal clamped_from_json(const nlohmann::json& j, ClampedNormal c) {
  c.mean = j.value("mean", c.mean);
  c.scale = j.value("scale", c.scale);
  c.lo = j.value("min", c.lo);
  c.hi = j.value("max", c.hi);
  if (c.lo > c.hi || c.scale < 0.0) throw InvalidInput("randomization: bad clamped-normal channel");
  return c;
}

UniformRange uniform_from_json(const nlohmann::json& j, UniformRange u) {
  u.lo = j.value("min", u.lo);
  u.hi = j.value("max", u.hi);
  if (u.lo > u.hi) throw InvalidInput("randomization: bad uniform channel");
  return u;
}

}  // namespace

RandomizationConfig randomization_from_json(const nlohmann::json& j, RandomizationConfig c) {
  if (j.contains("sensor_noise")) {
    const auto& n = j.at("sensor_noise");
    c.sensor_noise.enabled = n.value("enabled", c.sensor_noise.enabled);
    c.sensor_noise.omega = n.value("omega", c.sensor_noise.omega);
    c.sensor_noise.accel = n.value("accel", c.sensor_noise.accel);
    c.sensor_noise.q = n.value("q", c.sensor_noise.q);
    c.sensor_noise.qd = n.value("qd", c.sensor_noise.qd);
    c.sensor_noise.tau = n.value("tau", c.sensor_noise.tau);
    c.sensor_noise.f_grf = n.value("f_grf", c.sensor_noise.f_grf);
  }
  if (j.contains("friction")) c.friction = clamped_from_json(j.at("friction"), c.friction);
  if (j.contains("mass_offset")) c.mass_offset = clamped_from_json(j.at("mass_offset"), c.mass_offset);
  if (j.contains("kp_scale")) c.kp_scale = clamped_from_json(j.at("kp_scale"), c.kp_scale);
  if (j.contains("kd_scale")) c.kd_scale = clamped_from_json(j.at("kd_scale"), c.kd_scale);
  if (j.contains("vx_cmd")) c.vx_cmd = uniform_from_json(j.at("vx_cmd"), c.vx_cmd);
  if (j.contains("wz_cmd")) c.wz_cmd = uniform_from_json(j.at("wz_cmd"), c.wz_cmd);
  if (j.contains("gait")) c.gait = uniform_from_json(j.at("gait"), c.gait);
  if (j.contains("t_acc")) c.t_acc = uniform_from_json(j.at("t_acc"), c.t_acc);
  if (j.contains("segment_duration")) c.segment_duration = uniform_from_json(j.at("segment_duration"), c.segment_duration);
  c.q_init_std = j.value("q_init_std", c.q_init_std);
  c.randomize_gait = j.value("randomize_gait", c.randomize_gait);
  if (j.contains("fixed_gait")) c.fixed_gait = gait_from_name(j.at("fixed_gait").get<std::string>());
  return c;
}

CommandSchedule::CommandSchedule(std::vector<CommandSegment> segments) : segments_(std::move(segments)) {
  for (size_t i = 1; i < segments_.size(); ++i) {
    if (!(segments_[i].start > segments_[i - 1].start)) {
      throw InvalidInput("CommandSchedule: segment start times must be strictly increasing");
    }
  }
}

Command CommandSchedule::at(double t) const {
  if (segments_.empty()) return {};
  size_t k = 0;
  while (k + 1 < segments_.size() && t >= segments_[k + 1].start) ++k;
  const CommandSegment& s = segments_[k];
  Command c;
  c.gait = s.gait;
  const Vec3 from = k > 0 ? segments_[k - 1].velocity : Vec3::Zero();
  if (s.t_acc > 0.0 && t < s.start + s.t_acc) {
    const double u = std::clamp((t - s.start) / s.t_acc, 0.0, 1.0);
    c.velocity = from + u * (s.velocity - from);
  } else {
    c.velocity = s.velocity;
  }
  return c;
}

EpisodeConfig sample_episode_config(std::mt19937_64& rng, const RandomizationConfig& cfg, double duration) {
  EpisodeConfig ep;
  ep.friction = cfg.friction.sample(rng);
  ep.mass_offset = cfg.mass_offset.sample(rng);
  ep.kp_scale = cfg.kp_scale.sample(rng);
  ep.kd_scale = cfg.kd_scale.sample(rng);
  std::normal_distribution<double> n01(0.0, 1.0);
  for (int j = 0; j < kNumJoints; ++j) ep.q_init_offset[j] = cfg.q_init_std * n01(rng);

  std::vector<CommandSegment> segs;
  double t = 0.0;
  while (t < duration) {
    CommandSegment s;
    s.start = t;
    s.t_acc = cfg.t_acc.sample(rng);
    s.velocity = Vec3(cfg.vx_cmd.sample(rng), 0.0, cfg.wz_cmd.sample(rng));
    s.gait = cfg.randomize_gait ? gait_from_index(static_cast<int>(std::lround(cfg.gait.sample(rng)))) : cfg.fixed_gait;
    segs.push_back(s);
    t += std::max(cfg.segment_duration.sample(rng), 1e-3);
  }
  ep.commands = CommandSchedule(std::move(segs));
  return ep;
}

RobotModel apply_episode(const RobotModel& model, const EpisodeConfig& ep) {
  RobotModel m = model;
  m.base_mass += ep.mass_offset;
  m.kp *= ep.kp_scale;
  m.kd *= ep.kd_scale;
  return m;
}

}  // namespace gaitlab
