#pragma once

#include <nlohmann/json.hpp>

#include <random>
#include <vector>

#include "gaitlab/mlp.hpp"

namespace gaitlab {

/// Welford running mean/variance per dimension.
class RunningNormalizer {
 public:
  RunningNormalizer() = default;
  explicit RunningNormalizer(int dim, double eps = 1e-8, double clip = 10.0);

  void update(const VecX& x);
  /// (x - mean) / max(std, eps), clipped to +-clip when clip > 0.
  VecX normalize(const VecX& x) const;
  MatX normalize_batch(const MatX& x) const;

  int dim() const { return static_cast<int>(mean_.size()); }
  double count() const { return count_; }
  const VecX& mean() const { return mean_; }
  VecX stddev() const;
  bool frozen = false;

  nlohmann::json to_json() const;
  static RunningNormalizer from_json(const nlohmann::json& j);

 private:
  VecX mean_;
  VecX m2_;
  double count_ = 0.0;
  double eps_ = 1e-8;
  double clip_ = 10.0;
};

struct PpoHypers {
  int n_envs = 240;
  double clip = 0.2;
  int steps_per_batch = 400;
  double gae_lambda = 0.95;
  int epochs = 4;
  double lr = 5e-4;
  int minibatches = 4;
  double min_std = 0.2;
  double gamma = 0.99;
  double value_coef = 0.5;
  double entropy_coef = 0.0;
  /// Global gradient-norm clip; 0 disables it.
  double max_grad_norm = 1.0;
  double init_std = 1.0;
  std::vector<int> hidden{512, 256, 128};
};

nlohmann::json to_json(const PpoHypers& h);
PpoHypers ppo_hypers_from_json(const nlohmann::json& j, PpoHypers base = {});

/// Gaussian actor with a state-independent log-std vector plus a separate critic.
struct ActorCritic {
  Mlp actor;
  Mlp critic;
  VecX log_std;

  ActorCritic() = default;
  ActorCritic(int obs_dim, int act_dim, const std::vector<int>& hidden, std::mt19937_64& rng, double init_std);

  int obs_dim() const { return actor.input_size(); }
  int act_dim() const { return actor.output_size(); }

  /// Flat layout: actor params, critic params, log_std.
  int num_params() const;
  VecX params() const;
  void set_params(const VecX& p);

  void clamp_std(double min_std);
  VecX stddev() const { return log_std.array().exp(); }
};

double gaussian_log_prob(const VecX& action, const VecX& mean, const VecX& log_std);

struct GaeResult {
  VecX advantages;
  VecX returns;
};

/// delta_t = r_t + gamma (1 - terminal_t) next_value_t - v_t;
/// A_t = delta_t + gamma lambda (1 - episode_end_t) A_{t+1}.
/// `episode_end` marks terminal or truncated steps; truncation still bootstraps from next_value.
GaeResult gae(const VecX& rewards, const VecX& values, const VecX& next_values, const std::vector<bool>& terminal,
              const std::vector<bool>& episode_end, double gamma, double lambda);
/// Single-trajectory form: values has one extra trailing bootstrap entry.
GaeResult gae(const VecX& rewards, const VecX& values_with_bootstrap, const std::vector<bool>& dones, double gamma,
              double lambda);

/// One column per sample.
struct PpoBatch {
  MatX obs;
  MatX actions;
  VecX old_log_prob;
  VecX advantages;
  VecX returns;
};

struct PpoLoss {
  double total = 0.0;
  double policy = 0.0;
  double value = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
};

/// Clipped surrogate plus value loss on `batch` (observations already normalised).
/// Fills `grad` (flat ActorCritic layout) when non-null.
PpoLoss ppo_loss(const ActorCritic& net, const PpoBatch& batch, const PpoHypers& h, VecX* grad = nullptr);

struct PpoStats {
  PpoLoss last;
  double mean_policy_loss = 0.0;
  double mean_value_loss = 0.0;
  double mean_clip_fraction = 0.0;
  double mean_approx_kl = 0.0;
  int updates = 0;
};

/// Epochs x minibatches of Adam steps; advantages are standardised per minibatch.
PpoStats ppo_update(ActorCritic& net, Adam& opt, const PpoBatch& batch, const PpoHypers& h, std::mt19937_64& rng);

nlohmann::json to_json(const Mlp& net);
Mlp mlp_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ActorCritic& net);
ActorCritic actor_critic_from_json(const nlohmann::json& j);

}  // namespace gaitlab
