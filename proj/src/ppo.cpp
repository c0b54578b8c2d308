#include "gaitlab/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace gaitlab {

RunningNormalizer::RunningNormalizer(int dim, double eps, double clip)
    : mean_(VecX::Zero(dim)), m2_(VecX::Zero(dim)), eps_(eps), clip_(clip) {
  if (dim <= 0) throw InvalidInput("RunningNormalizer: dimension must be positive");
}

void RunningNormalizer::update(const VecX& x) {
  if (frozen) return;
  if (x.size() != mean_.size()) throw ContractViolation("RunningNormalizer::update: size mismatch");
  count_ += 1.0;
  const VecX delta = x - mean_;
  mean_ += delta / count_;
  m2_ += delta.cwiseProduct(x - mean_);
}

VecX RunningNormalizer::stddev() const {
  if (count_ < 1.0) return VecX::Ones(mean_.size());
  return (m2_ / count_).cwiseSqrt();
}

VecX RunningNormalizer::normalize(const VecX& x) const {
  if (x.size() != mean_.size()) throw ContractViolation("RunningNormalizer::normalize: size mismatch");
  const VecX sd = stddev().cwiseMax(eps_);
  VecX out = (x - mean_).cwiseQuotient(sd);
  if (clip_ > 0.0) out = out.cwiseMax(-clip_).cwiseMin(clip_);
  return out;
}

MatX RunningNormalizer::normalize_batch(const MatX& x) const {
  MatX out(x.rows(), x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) out.col(c) = normalize(x.col(c));
  return out;
}

nlohmann::json RunningNormalizer::to_json() const {
  return {{"mean", std::vector<double>(mean_.data(), mean_.data() + mean_.size())},
          {"m2", std::vector<double>(m2_.data(), m2_.data() + m2_.size())},
          {"count", count_},
          {"eps", eps_},
          {"clip", clip_}};
}

RunningNormalizer RunningNormalizer::from_json(const nlohmann::json& j) {
  const auto mean = j.at("mean").get<std::vector<double>>();
  const auto m2 = j.at("m2").get<std::vector<double>>();
  if (mean.size() != m2.size() || mean.empty()) throw InvalidInput("RunningNormalizer: malformed statistics");
  RunningNormalizer n(static_cast<int>(mean.size()), j.value("eps", 1e-8), j.value("clip", 10.0));
  n.mean_ = Eigen::Map<const VecX>(mean.data(), static_cast<Eigen::Index>(mean.size()));
  n.m2_ = Eigen::Map<const VecX>(m2.data(), static_cast<Eigen::Index>(m2.size()));
  n.count_ = j.at("count").get<double>();
  return n;
}

nlohmann::json to_json(const PpoHypers& h) {
  return {{"n_envs", h.n_envs},
          {"clip", h.clip},
          {"steps_per_batch", h.steps_per_batch},
          {"gae_lambda", h.gae_lambda},
          {"epochs", h.epochs},
          {"lr", h.lr},
          {"minibatches", h.minibatches},
          {"min_std", h.min_std},
          {"gamma", h.gamma},
          {"value_coef", h.value_coef},
          {"entropy_coef", h.entropy_coef},
          {"max_grad_norm", h.max_grad_norm},
          {"init_std", h.init_std},
          {"hidden", h.hidden}};
}

PpoHypers ppo_hypers_from_json(const nlohmann::json& j, PpoHypers h) {
  h.n_envs = j.value("n_envs", h.n_envs);
  h.clip = j.value("clip", h.clip);
  h.steps_per_batch = j.value("steps_per_batch", h.steps_per_batch);
  h.gae_lambda = j.value("gae_lambda", h.gae_lambda);
  h.epochs = j.value("epochs", h.epochs);
  h.lr = j.value("lr", h.lr);
  h.minibatches = j.value("minibatches", h.minibatches);
  h.min_std = j.value("min_std", h.min_std);
  h.gamma = j.value("gamma", h.gamma);
  h.value_coef = j.value("value_coef", h.value_coef);
  h.entropy_coef = j.value("entropy_coef", h.entropy_coef);
  h.max_grad_norm = j.value("max_grad_norm", h.max_grad_norm);
  h.init_std = j.value("init_std", h.init_std);
  h.hidden = j.value("hidden", h.hidden);
  if (h.n_envs < 1 || h.steps_per_batch < 1 || h.epochs < 1 || h.minibatches < 1 || !(h.lr > 0.0) ||
      !(h.clip > 0.0) || h.min_std < 0.0) {
    throw InvalidInput("PpoHypers: out-of-range value");
  }
  return h;
}

ActorCritic::ActorCritic(int obs_dim, int act_dim, const std::vector<int>& hidden, std::mt19937_64& rng,
                         double init_std) {
  std::vector<int> sizes{obs_dim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  std::vector<int> a = sizes, c = sizes;
  a.push_back(act_dim);
  c.push_back(1);
  actor = Mlp(a, rng, 0.01);
  critic = Mlp(c, rng, 1.0);
  log_std = VecX::Constant(act_dim, std::log(init_std));
}

int ActorCritic::num_params() const {
  return actor.num_params() + critic.num_params() + static_cast<int>(log_std.size());
}

VecX ActorCritic::params() const {
  VecX p(num_params());
  p << actor.params(), critic.params(), log_std;
  return p;
}

void ActorCritic::set_params(const VecX& p) {
  if (p.size() != num_params()) throw ContractViolation("ActorCritic::set_params: size mismatch");
  const int na = actor.num_params(), nc = critic.num_params();
  actor.set_params(p.head(na));
  critic.set_params(p.segment(na, nc));
  log_std = p.tail(log_std.size());
}

void ActorCritic::clamp_std(double min_std) { log_std = log_std.cwiseMax(std::log(min_std)); }

double gaussian_log_prob(const VecX& action, const VecX& mean, const VecX& log_std) {
  const VecX z = (action - mean).cwiseQuotient(log_std.array().exp().matrix());
  return -0.5 * z.squaredNorm() - log_std.sum() - 0.5 * static_cast<double>(action.size()) * std::log(2.0 * std::numbers::pi);
}

GaeResult gae(const VecX& rewards, const VecX& values, const VecX& next_values, const std::vector<bool>& terminal,
              const std::vector<bool>& episode_end, double gamma, double lambda) {
  const Eigen::Index n = rewards.size();
  if (values.size() != n || next_values.size() != n || static_cast<Eigen::Index>(terminal.size()) != n ||
      static_cast<Eigen::Index>(episode_end.size()) != n) {
    throw ContractViolation("gae: misaligned arrays");
  }
  GaeResult out{VecX::Zero(n), VecX::Zero(n)};
  double next_adv = 0.0;
  for (Eigen::Index t = n - 1; t >= 0; --t) {
    const auto k = static_cast<size_t>(t);
    const double boot = terminal[k] ? 0.0 : gamma * next_values[t];
    const double delta = rewards[t] + boot - values[t];
    const double carry = (episode_end[k] || terminal[k]) ? 0.0 : gamma * lambda * next_adv;
    next_adv = delta + carry;
    out.advantages[t] = next_adv;
  }
  out.returns = out.advantages + values;
  return out;
}

GaeResult gae(const VecX& rewards, const VecX& values_with_bootstrap, const std::vector<bool>& dones, double gamma,
              double lambda) {
  const Eigen::Index n = rewards.size();
  if (values_with_bootstrap.size() != n + 1) throw ContractViolation("gae: expected one bootstrap value");
  return gae(rewards, values_with_bootstrap.head(n), values_with_bootstrap.tail(n), dones, dones, gamma, lambda);
}

PpoLoss ppo_loss(const ActorCritic& net, const PpoBatch& b, const PpoHypers& h, VecX* grad) {
  const Eigen::Index n = b.obs.cols();
  if (n == 0) throw ContractViolation("ppo_loss: empty batch");
  if (b.actions.cols() != n || b.old_log_prob.size() != n || b.advantages.size() != n || b.returns.size() != n) {
    throw ContractViolation("ppo_loss: misaligned batch");
  }
  Mlp::Cache ca, cc;
  const MatX mean = net.actor.forward(b.obs, ca);
  const MatX value = net.critic.forward(b.obs, cc);
  const VecX sd = net.stddev();
  const VecX inv_var = sd.cwiseAbs2().cwiseInverse();
  const double log_norm = net.log_std.sum() + 0.5 * static_cast<double>(net.act_dim()) * std::log(2.0 * std::numbers::pi);
  const double inv_n = 1.0 / static_cast<double>(n);

  PpoLoss loss;
  VecX dlogp(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const VecX diff = b.actions.col(i) - mean.col(i);
    const double logp = -0.5 * diff.cwiseAbs2().dot(inv_var) - log_norm;
    const double r = std::exp(logp - b.old_log_prob[i]);
    const double a = b.advantages[i];
    const double s1 = r * a;
    const double s2 = std::clamp(r, 1.0 - h.clip, 1.0 + h.clip) * a;
    loss.policy -= std::min(s1, s2) * inv_n;
    dlogp[i] = s1 <= s2 ? -a * r * inv_n : 0.0;
    if (std::abs(r - 1.0) > h.clip) loss.clip_fraction += inv_n;
    loss.approx_kl += ((r - 1.0) - (logp - b.old_log_prob[i])) * inv_n;
  }
  const VecX verr = value.row(0).transpose() - b.returns;
  loss.value = verr.squaredNorm() * inv_n;
  loss.entropy = net.log_std.sum() + 0.5 * static_cast<double>(net.act_dim()) * (1.0 + std::log(2.0 * std::numbers::pi));
  loss.total = loss.policy + h.value_coef * loss.value - h.entropy_coef * loss.entropy;
  if (!std::isfinite(loss.total)) throw TrainingDiverged("ppo_loss: non-finite loss");

  if (grad) {
    const int na = net.actor.num_params(), nc = net.critic.num_params();
    grad->setZero(net.num_params());
    MatX gmean(net.act_dim(), n);
    VecX glog = VecX::Constant(net.act_dim(), -h.entropy_coef);
    for (Eigen::Index i = 0; i < n; ++i) {
      const VecX diff = b.actions.col(i) - mean.col(i);
      gmean.col(i) = dlogp[i] * diff.cwiseProduct(inv_var);
      glog += dlogp[i] * (diff.cwiseAbs2().cwiseProduct(inv_var) - VecX::Ones(net.act_dim()));
    }
    VecX ga = VecX::Zero(na), gc = VecX::Zero(nc);
    net.actor.backward(ca, gmean, ga);
    const MatX gval = (2.0 * h.value_coef * inv_n) * verr.transpose();
    net.critic.backward(cc, gval, gc);
    grad->head(na) = ga;
    grad->segment(na, nc) = gc;
    grad->tail(net.act_dim()) = glog;
  }
  return loss;
}

PpoStats ppo_update(ActorCritic& net, Adam& opt, const PpoBatch& batch, const PpoHypers& h, std::mt19937_64& rng) {
  const Eigen::Index n = batch.obs.cols();
  const int mb = std::max<int>(1, std::min<int>(h.minibatches, static_cast<int>(n)));
  std::vector<Eigen::Index> idx(static_cast<size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});

  PpoStats stats;
  VecX params = net.params();
  VecX grad;
  for (int e = 0; e < h.epochs; ++e) {
    std::shuffle(idx.begin(), idx.end(), rng);
    for (int m = 0; m < mb; ++m) {
      const Eigen::Index lo = n * m / mb, hi = n * (m + 1) / mb;
      const Eigen::Index k = hi - lo;
      PpoBatch sub{MatX(batch.obs.rows(), k), MatX(batch.actions.rows(), k), VecX(k), VecX(k), VecX(k)};
      for (Eigen::Index j = 0; j < k; ++j) {
        const Eigen::Index src = idx[static_cast<size_t>(lo + j)];
        sub.obs.col(j) = batch.obs.col(src);
        sub.actions.col(j) = batch.actions.col(src);
        sub.old_log_prob[j] = batch.old_log_prob[src];
        sub.advantages[j] = batch.advantages[src];
        sub.returns[j] = batch.returns[src];
      }
      if (k > 1) {
        const double mu = sub.advantages.mean();
        const double sd = std::sqrt((sub.advantages.array() - mu).square().mean());
        sub.advantages = (sub.advantages.array() - mu) / (sd + 1e-8);
      }
      const PpoLoss l = ppo_loss(net, sub, h, &grad);
      if (h.max_grad_norm > 0.0) {
        const double gn = grad.norm();
        if (gn > h.max_grad_norm) grad *= h.max_grad_norm / gn;
      }
      opt.step(params, grad);
      net.set_params(params);
      net.clamp_std(h.min_std);
      params.tail(net.act_dim()) = net.log_std;

      stats.last = l;
      stats.mean_policy_loss += l.policy;
      stats.mean_value_loss += l.value;
      stats.mean_clip_fraction += l.clip_fraction;
      stats.mean_approx_kl += l.approx_kl;
      ++stats.updates;
    }
  }
  if (stats.updates > 0) {
    const double inv = 1.0 / stats.updates;
    stats.mean_policy_loss *= inv;
    stats.mean_value_loss *= inv;
    stats.mean_clip_fraction *= inv;
    stats.mean_approx_kl *= inv;
  }
  return stats;
}

nlohmann::json to_json(const Mlp& net) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : net.layers()) {
    layers.push_back({{"w", std::vector<double>(l.w.data(), l.w.data() + l.w.size())},
                      {"b", std::vector<double>(l.b.data(), l.b.data() + l.b.size())}});
  }
  return {{"sizes", net.sizes()}, {"activation", "leaky_relu"}, {"layout", "column_major"}, {"layers", layers}};
}

Mlp mlp_from_json(const nlohmann::json& j) {
  Mlp net(j.at("sizes").get<std::vector<int>>());
  const auto& layers = j.at("layers");
  if (layers.size() != net.layers().size()) throw InvalidInput("mlp_from_json: layer count mismatch");
  for (size_t l = 0; l < layers.size(); ++l) {
    auto& dst = net.layers()[l];
    const auto w = layers[l].at("w").get<std::vector<double>>();
    const auto b = layers[l].at("b").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(w.size()) != dst.w.size() || static_cast<Eigen::Index>(b.size()) != dst.b.size()) {
      throw InvalidInput("mlp_from_json: layer shape mismatch");
    }
    dst.w = Eigen::Map<const MatX>(w.data(), dst.w.rows(), dst.w.cols());
    dst.b = Eigen::Map<const VecX>(b.data(), dst.b.size());
  }
  return net;
}

nlohmann::json to_json(const ActorCritic& net) {
  return {{"actor", to_json(net.actor)},
          {"critic", to_json(net.critic)},
          {"log_std", std::vector<double>(net.log_std.data(), net.log_std.data() + net.log_std.size())}};
}

ActorCritic actor_critic_from_json(const nlohmann::json& j) {
  ActorCritic net;
  net.actor = mlp_from_json(j.at("actor"));
  net.critic = mlp_from_json(j.at("critic"));
  const auto ls = j.at("log_std").get<std::vector<double>>();
  if (static_cast<int>(ls.size()) != net.actor.output_size()) throw InvalidInput("actor_critic_from_json: log_std size");
  net.log_std = Eigen::Map<const VecX>(ls.data(), static_cast<Eigen::Index>(ls.size()));
  return net;
}

}  // namespace gaitlab
