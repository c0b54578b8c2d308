#include "gaitlab/training.hpp"

#include "gaitlab/gait_selector.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>

namespace gaitlab {

PolicyController::PolicyController(RobotModel model, double action_scale, double action_clip)
    : model_(std::move(model)), scale_(action_scale), clip_(action_clip) {}

void PolicyController::set_action(const VecX& action) {
  if (action.size() != kNumJoints) throw ContractViolation("PolicyController: expected 12 actions");
  if (!action.allFinite()) throw TrainingDiverged("PolicyController: non-finite action");
  action_ = action.cwiseMax(-clip_).cwiseMin(clip_);
}

Vec12 reference_joint_positions(const SimState& s, const BetaL& beta, const RobotModel& model) {
  Vec12 q;
  for (int i = 0; i < kNumLegs; ++i) {
    const Vec3 r = s.rotation.transpose() * (beta.foot(i) - s.position);
    q.segment<3>(3 * i) = leg_ik(r - model.hip_offsets[static_cast<size_t>(i)], model, i).q;
  }
  return q;
}

Vec12 PolicyController::compute(const ControlContext& ctx) {
  if (!ctx.truth || !ctx.beta_l) throw ContractViolation("PolicyController: incomplete context");
  return reference_joint_positions(*ctx.truth, *ctx.beta_l, model_) + scale_ * action_;
}

std::unique_ptr<LocomotionController> PolicyController::clone() const {
  return std::make_unique<PolicyController>(*this);
}

StepResult BanditEnv::step(const VecX& action) {
  if (action.size() != 1) throw ContractViolation("BanditEnv: expected one action");
  StepResult r;
  r.obs = VecX::Ones(1);
  const double e = action[0] - optimum_;
  r.reward = -e * e;
  r.terminal = true;
  return r;
}

namespace {

bool state_finite(const SimState& s) {
  return s.position.allFinite() && s.linear_velocity.allFinite() && s.angular_velocity.allFinite() &&
         s.q.allFinite() && s.qd.allFinite();
}

SimState perturbed_start(const RobotModel& model, const Terrain& terrain, const Vec12& q_offset) {
  SimState s = standing_state(model, terrain);
  s.q += q_offset;
  return s;
}

StackConfig episode_stack(const StackConfig& base, const EpisodeConfig& ep, const RandomizationConfig& rc) {
  StackConfig sc = base;
  sc.model = apply_episode(base.model, ep);
  sc.sim.friction = ep.friction;
  sc.noise = rc.sensor_noise;
  return sc;
}

}  // namespace

ObservationL locomotion_observation(const LocomotionStack& stack) {
  const SimState& s = stack.sim().state();
  const BetaL rel = beta_l_relative(stack.beta_l(), s.position, yaw_of(s.rotation));
  return build_obs_l(rel, stack.estimator().output(), stack.command().velocity);
}

LocoEnv::LocoEnv(LocoEnvConfig cfg)
    : cfg_(std::move(cfg)), terrain_(std::make_shared<Terrain>(flat_terrain())) {}

VecX LocoEnv::reset(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  episode_ = sample_episode_config(rng, cfg_.randomization, cfg_.episode_duration);
  const StackConfig sc = episode_stack(cfg_.stack, episode_, cfg_.randomization);
  const SimState start = perturbed_start(sc.model, *terrain_, episode_.q_init_offset);
  const Command c0 = episode_.commands.at(0.0);
  stack_ = std::make_unique<LocomotionStack>(
      sc, terrain_, std::make_unique<PolicyController>(sc.model, cfg_.action_scale, cfg_.action_clip), c0.gait,
      rng(), &start);
  stack_->set_command(c0);
  qd_prev_ = qd_prev2_ = start.qd;
  q_star_prev_ = stack_->q_star();
  steps_ = 0;
  // One control step populates the references seen by the first observation.
  stack_->control_step();
  return observe();
}

VecX LocoEnv::observe() const { return locomotion_observation(*stack_); }

StepResult LocoEnv::step(const VecX& action) {
  if (!stack_) throw ContractViolation("LocoEnv::step before reset");
  auto& ctrl = dynamic_cast<PolicyController&>(stack_->controller());
  ctrl.set_action(action);
  stack_->set_command(episode_.commands.at(stack_->time()));

  StepResult out;
  try {
    stack_->selection_step();
  } catch (const SimulationDiverged&) {
    out.terminal = true;
  }
  ++steps_;
  const SimState& s = stack_->sim().state();
  if (!out.terminal && (!state_finite(s) || stack_->fallen())) out.terminal = true;
  if (!state_finite(s)) {
    out.obs = VecX::Zero(kObsLSize);
    out.terms.assign(4, 0.0);
    return out;
  }

  const BetaL& beta = stack_->beta_l();
  LocomotionRewardInputs in;
  in.velocity = stack_->tracked_velocity();
  in.velocity_cmd = stack_->command().velocity;
  in.contact = s.contact;
  in.contact_ref = beta.contact_ref;
  in.feet = s.feet;
  for (int i = 0; i < kNumLegs; ++i) in.feet_ref[static_cast<size_t>(i)] = beta.foot(i);
  in.foot_velocities = s.foot_velocities;
  in.omega = s.angular_velocity;
  in.rotation = s.rotation;
  in.z = s.position.z() - stack_->sim().terrain().height(s.position.x(), s.position.y());
  in.q = s.q;
  in.tau = s.tau;
  in.q_jerk = s.qd - 2.0 * qd_prev_ + qd_prev2_;
  in.q_star = stack_->q_star();
  in.q_star_prev = q_star_prev_;
  const RewardBreakdownL r = reward_locomotion(in, cfg_.reward);
  qd_prev2_ = qd_prev_;
  qd_prev_ = s.qd;
  q_star_prev_ = stack_->q_star();

  out.reward = r.total;
  out.terms = {r.r_eta, r.r_v, r.r_f, r.r_stab};
  out.obs = observe();
  const double step_dt = cfg_.stack.selection_decimation * cfg_.stack.sim.dt;
  if (!out.terminal && steps_ * step_dt >= cfg_.episode_duration - 1e-9) out.truncated = true;
  return out;
}

GaitEnv::GaitEnv(GaitEnvConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.terrain_levels.empty()) throw InvalidInput("GaitEnv: no terrain levels");
  for (int level : cfg_.terrain_levels) {
    terrains_.push_back(level == 0 ? std::make_shared<Terrain>(flat_terrain())
                                   : std::make_shared<Terrain>(generate_terrain(level, cfg_.terrain_seed)));
  }
  if (!cfg_.controller) {
    cfg_.controller = [](const RobotModel& m) { return std::make_unique<ScriptedController>(m); };
  }
}

VecX GaitEnv::reset(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  episode_ = sample_episode_config(rng, cfg_.randomization, cfg_.episode_duration);
  const StackConfig sc = episode_stack(cfg_.stack, episode_, cfg_.randomization);
  std::uniform_int_distribution<size_t> pick(0, terrains_.size() - 1);
  const auto& terrain = terrains_[pick(rng)];
  const SimState start = perturbed_start(sc.model, *terrain, episode_.q_init_offset);
  stack_ = std::make_unique<LocomotionStack>(sc, terrain, cfg_.controller(sc.model), GaitId::Stand, rng(), &start);
  gait_prev_ = GaitId::Stand;
  gait_prev_raw_ = 0.0;
  cmd_prev_ = episode_.commands.at(0.0).velocity;
  stack_->set_command({cmd_prev_, GaitId::Stand});
  stack_->control_step();
  steps_ = 0;
  return observe(Vec3::Zero());
}

VecX GaitEnv::observe(const Vec3& accel_cmd) const {
  return build_obs_g(stack_->estimator().output(), stack_->beta_g(), stack_->command().velocity, accel_cmd,
                     gait_prev_raw_);
}

StepResult GaitEnv::step(const VecX& action) {
  if (!stack_) throw ContractViolation("GaitEnv::step before reset");
  if (action.size() != 1) throw ContractViolation("GaitEnv: expected one action");
  const GaitId gait = gait_from_action(action[0]);
  const Vec3 v_cmd = episode_.commands.at(stack_->time()).velocity;
  stack_->set_command({v_cmd, gait});

  StepResult out;
  SelectionStep st;
  try {
    st = stack_->selection_step();
  } catch (const SimulationDiverged&) {
    out.terminal = true;
  }
  ++steps_;
  if (!out.terminal && (!state_finite(stack_->sim().state()) || stack_->fallen())) out.terminal = true;
  if (!state_finite(stack_->sim().state())) {
    out.obs = VecX::Zero(kObsGSize);
    out.terms.assign(7, 0.0);
    return out;
  }
  const RewardBreakdownG r = reward_gait_selection(st.metrics, v_cmd, gait, gait_prev_, st.velocity);
  out.reward = r.total;
  out.terms = {r.r_v, r.r_stand, r.r_smooth, r.psi_cot, r.psi_tau, r.psi_c, r.psi_w};

  gait_prev_ = gait;
  gait_prev_raw_ = action[0];
  const double step_dt = cfg_.stack.selection_decimation * cfg_.stack.sim.dt;
  const Vec3 next_cmd = episode_.commands.at(stack_->time()).velocity;
  const Vec3 accel = command_acceleration(next_cmd, cmd_prev_, step_dt);
  cmd_prev_ = next_cmd;
  stack_->set_command({next_cmd, gait});
  out.obs = observe(accel);
  if (!out.terminal && steps_ * step_dt >= cfg_.episode_duration - 1e-9) out.truncated = true;
  return out;
}

namespace {

/// Running std of the per-env discounted return, used to rescale rewards.
struct ReturnScaler {
  double gamma;
  VecX ret;
  RunningNormalizer stats{1, 1e-8, 0.0};

  ReturnScaler(int n, double g) : gamma(g), ret(VecX::Zero(n)) {}

  double scale(int env, double reward, bool done) {
    ret[env] = gamma * ret[env] + reward;
    stats.update(VecX::Constant(1, ret[env]));
    if (done) ret[env] = 0.0;
    const double sd = stats.count() > 1.0 ? stats.stddev()[0] : 1.0;
    return reward / std::max(sd, 1e-8);
  }
};

struct EnvTrack {
  std::vector<double> rewards, values, next_values;
  std::vector<bool> terminal, ended;
  std::vector<VecX> obs, actions;
  std::vector<double> log_probs;
};

}  // namespace

TrainResult train(const EnvFactory& make_env, const TrainConfig& cfg) {
  const PpoHypers& h = cfg.hypers;
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::unique_ptr<Env>> envs;
  for (int i = 0; i < h.n_envs; ++i) envs.push_back(make_env(i));
  const int od = envs.front()->obs_dim(), ad = envs.front()->act_dim();

  TrainResult res;
  res.term_names = envs.front()->term_names();
  res.net = ActorCritic(od, ad, h.hidden, rng, h.init_std);
  res.obs_norm = RunningNormalizer(od);
  Adam opt(res.net.num_params(), AdamConfig{h.lr});
  ReturnScaler scaler(h.n_envs, h.gamma);

  std::ofstream log;
  if (!cfg.log_csv.empty()) {
    log.open(cfg.log_csv);
    if (!log) throw InvalidInput("train: cannot open log " + cfg.log_csv);
    write_training_log_header(log, res.term_names);
  }

  std::vector<VecX> obs(static_cast<size_t>(h.n_envs));
  for (int i = 0; i < h.n_envs; ++i) {
    obs[static_cast<size_t>(i)] = envs[static_cast<size_t>(i)]->reset(rng());
  }
  std::vector<double> ep_return(static_cast<size_t>(h.n_envs), 0.0);
  std::normal_distribution<double> n01(0.0, 1.0);
  const auto t0 = std::chrono::steady_clock::now();
  const size_t n_terms = res.term_names.size();

  auto normalized = [&](const VecX& o) { return cfg.normalize_obs ? res.obs_norm.normalize(o) : o; };
  auto save = [&](int it) {
    if (cfg.checkpoint_path.empty()) return;
    save_checkpoint(cfg.checkpoint_path, Checkpoint{1, cfg.kind, it, res.net, res.obs_norm, h});
  };

  ActorCritic last_good = res.net;
  RunningNormalizer last_good_norm = res.obs_norm;
  for (int it = 0; it < cfg.iterations; ++it) {
    IterationLog row;
    row.iteration = it;
    row.term_means.assign(n_terms, 0.0);
    std::vector<EnvTrack> tracks(static_cast<size_t>(h.n_envs));
    double reward_sum = 0.0, episode_return_sum = 0.0;
    long samples = 0;

    try {
      for (int t = 0; t < h.steps_per_batch; ++t) {
        MatX batch(od, h.n_envs);
        for (int i = 0; i < h.n_envs; ++i) {
          if (cfg.normalize_obs) res.obs_norm.update(obs[static_cast<size_t>(i)]);
        }
        for (int i = 0; i < h.n_envs; ++i) batch.col(i) = normalized(obs[static_cast<size_t>(i)]);
        const MatX mean = res.net.actor.forward(batch);
        const MatX value = res.net.critic.forward(batch);
        const VecX sd = res.net.stddev();

        for (int i = 0; i < h.n_envs; ++i) {
          const auto k = static_cast<size_t>(i);
          VecX a = mean.col(i);
          for (int j = 0; j < ad; ++j) a[j] += sd[j] * n01(rng);
          EnvTrack& tr = tracks[k];
          if (!tr.values.empty() && !tr.ended.back() && !tr.terminal.back()) tr.next_values.back() = value(0, i);
          tr.obs.push_back(batch.col(i));
          tr.actions.push_back(a);
          tr.log_probs.push_back(gaussian_log_prob(a, mean.col(i), res.net.log_std));
          tr.values.push_back(value(0, i));

          StepResult r = envs[k]->step(a);
          const bool done = r.terminal || r.truncated;
          tr.rewards.push_back(cfg.scale_rewards ? scaler.scale(i, r.reward, done) : r.reward);
          tr.terminal.push_back(r.terminal);
          tr.ended.push_back(done);
          tr.next_values.push_back(0.0);
          reward_sum += r.reward;
          ep_return[k] += r.reward;
          ++samples;
          for (size_t m = 0; m < n_terms && m < r.terms.size(); ++m) row.term_means[m] += r.terms[m];

          if (r.truncated) {
            tr.next_values.back() = res.net.critic.forward(normalized(r.obs))(0, 0);
          }
          if (done) {
            episode_return_sum += ep_return[k];
            ep_return[k] = 0.0;
            ++row.episodes;
            obs[k] = envs[k]->reset(rng());
          } else {
            obs[k] = r.obs;
          }
        }
      }

      // Bootstrap the trajectories cut by the batch boundary.
      for (int i = 0; i < h.n_envs; ++i) {
        EnvTrack& tr = tracks[static_cast<size_t>(i)];
        if (!tr.ended.back()) {
          tr.next_values.back() = res.net.critic.forward(normalized(obs[static_cast<size_t>(i)]))(0, 0);
          tr.ended.back() = true;
        }
      }

      PpoBatch batch{MatX(od, samples), MatX(ad, samples), VecX(samples), VecX(samples), VecX(samples)};
      Eigen::Index col = 0;
      for (const EnvTrack& tr : tracks) {
        const auto n = static_cast<Eigen::Index>(tr.rewards.size());
        const GaeResult g =
            gae(Eigen::Map<const VecX>(tr.rewards.data(), n), Eigen::Map<const VecX>(tr.values.data(), n),
                Eigen::Map<const VecX>(tr.next_values.data(), n), tr.terminal, tr.ended, h.gamma, h.gae_lambda);
        for (Eigen::Index t = 0; t < n; ++t, ++col) {
          batch.obs.col(col) = tr.obs[static_cast<size_t>(t)];
          batch.actions.col(col) = tr.actions[static_cast<size_t>(t)];
          batch.old_log_prob[col] = tr.log_probs[static_cast<size_t>(t)];
          batch.advantages[col] = g.advantages[t];
          batch.returns[col] = g.returns[t];
        }
      }
      const PpoStats stats = ppo_update(res.net, opt, batch, h, rng);
      row.policy_loss = stats.mean_policy_loss;
      row.value_loss = stats.mean_value_loss;
      row.clip_fraction = stats.mean_clip_fraction;
      row.approx_kl = stats.mean_approx_kl;
    } catch (const TrainingDiverged& e) {
      res.net = last_good;
      res.obs_norm = last_good_norm;
      res.diverged = true;
      res.divergence_message = e.what();
      save(it);
      return res;
    }
    last_good = res.net;
    last_good_norm = res.obs_norm;

    row.mean_reward = reward_sum / static_cast<double>(samples);
    row.mean_episode_return = row.episodes > 0 ? episode_return_sum / row.episodes : 0.0;
    for (double& m : row.term_means) m /= static_cast<double>(samples);
    row.mean_std = res.net.stddev().mean();
    row.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.log.push_back(row);
    if (log) {
      write_training_log_row(log, row);
      log.flush();
    }
    if (cfg.on_iteration) cfg.on_iteration(row);
    if (cfg.checkpoint_every > 0 && (it + 1) % cfg.checkpoint_every == 0) save(it + 1);
  }
  save(cfg.iterations);
  return res;
}

void write_training_log_header(std::ostream& out, const std::vector<std::string>& term_names) {
  out << "iteration,mean_reward,mean_episode_return,episodes";
  for (const auto& n : term_names) out << ',' << n;
  out << ",policy_loss,value_loss,clip_fraction,approx_kl,mean_std,elapsed\n";
}

void write_training_log_row(std::ostream& out, const IterationLog& r) {
  out << r.iteration << ',' << r.mean_reward << ',' << r.mean_episode_return << ',' << r.episodes;
  for (double m : r.term_means) out << ',' << m;
  out << ',' << r.policy_loss << ',' << r.value_loss << ',' << r.clip_fraction << ',' << r.approx_kl << ','
      << r.mean_std << ',' << r.elapsed << '\n';
}

nlohmann::json to_json(const Checkpoint& c) {
  return {{"format", "gaitlab-checkpoint"}, {"version", c.version},        {"kind", c.kind},
          {"iteration", c.iteration},       {"obs_dim", c.net.obs_dim()},  {"act_dim", c.net.act_dim()},
          {"net", to_json(c.net)},          {"obs_norm", c.obs_norm.to_json()}, {"hypers", to_json(c.hypers)}};
}

Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "gaitlab-checkpoint") throw InvalidInput("checkpoint: unrecognised format");
  Checkpoint c;
  c.version = j.at("version").get<int>();
  if (c.version != 1) throw InvalidInput("checkpoint: unsupported version " + std::to_string(c.version));
  c.kind = j.value("kind", "");
  c.iteration = j.value("iteration", 0);
  c.net = actor_critic_from_json(j.at("net"));
  c.obs_norm = RunningNormalizer::from_json(j.at("obs_norm"));
  c.hypers = ppo_hypers_from_json(j.value("hypers", nlohmann::json::object()));
  if (c.net.obs_dim() != j.at("obs_dim").get<int>() || c.obs_norm.dim() != c.net.obs_dim()) {
    throw InvalidInput("checkpoint: dimension mismatch");
  }
  return c;
}

void save_checkpoint(const std::string& path, const Checkpoint& c) {
  std::ofstream f(path);
  if (!f) throw InvalidInput("save_checkpoint: cannot open " + path);
  f << to_json(c).dump() << '\n';
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InvalidInput("load_checkpoint: cannot open " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidInput("load_checkpoint: " + std::string(e.what()));
  }
  return checkpoint_from_json(j);
}

VecX policy_action(const ActorCritic& net, const RunningNormalizer& norm, const VecX& obs) {
  return net.actor.forward(norm.normalize(obs)).col(0);
}

void drive_locomotion_policy(LocomotionStack& stack, const ActorCritic& net, const RunningNormalizer& norm) {
  auto* ctrl = dynamic_cast<PolicyController*>(&stack.controller());
  if (!ctrl) throw ContractViolation("drive_locomotion_policy: stack is not policy-driven");
  ctrl->set_action(policy_action(net, norm, locomotion_observation(stack)));
}

}  // namespace gaitlab
