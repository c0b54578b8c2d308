#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "generators.hpp"
#include "gaitlab/mlp.hpp"
#include "gaitlab/observations.hpp"
#include "gaitlab/ppo.hpp"
#include "gaitlab/randomization.hpp"
#include "gaitlab/training.hpp"

using namespace gaitlab;
using gaitlab::testing::Gen;
using gaitlab::testing::for_all;

namespace {

// Advantage by its defining double sum, ignoring episode boundaries.
VecX gae_oracle(const VecX& r, const VecX& v, const VecX& v_next, double gamma, double lambda) {
  const Eigen::Index n = r.size();
  VecX a = VecX::Zero(n);
  for (Eigen::Index t = 0; t < n; ++t) {
    double w = 1.0;
    for (Eigen::Index k = t; k < n; ++k) {
      a[t] += w * (r[k] + gamma * v_next[k] - v[k]);
      w *= gamma * lambda;
    }
  }
  return a;
}

PpoBatch random_batch(Gen& g, const ActorCritic& net, int n, double logp_shift) {
  PpoBatch b{MatX(net.obs_dim(), n), MatX(net.act_dim(), n), VecX(n), VecX(n), VecX(n)};
  for (int i = 0; i < n; ++i) {
    for (int r = 0; r < net.obs_dim(); ++r) b.obs(r, i) = g.normal();
    for (int r = 0; r < net.act_dim(); ++r) b.actions(r, i) = g.normal();
    const VecX mean = net.actor.forward(b.obs.col(i)).col(0);
    b.old_log_prob[i] = gaussian_log_prob(b.actions.col(i), mean, net.log_std) + logp_shift;
    b.advantages[i] = g.normal();
    b.returns[i] = g.normal();
  }
  return b;
}

}  // namespace

TEST_SUITE("learning") {

TEST_CASE("leaky relu and zero network") {
  CHECK(leaky_relu(-1.0) == -0.01);
  CHECK(leaky_relu(2.0) == 2.0);
  const Mlp z({5, 8, 3});
  CHECK(z.forward(MatX::Random(5, 4)).isZero());
  CHECK(z.num_params() == 5 * 8 + 8 + 8 * 3 + 3);
}

TEST_CASE("mlp backward matches central differences") {
  for_all(10, 51, [](Gen& g) {
    Mlp net({3, 6, 4, 2}, g.rng, 1.0);
    const MatX x = MatX::Random(3, 5);
    const MatX w = MatX::Random(2, 5);  // loss = sum(w .* y)
    Mlp::Cache cache;
    net.forward(x, cache);
    VecX grad = VecX::Zero(net.num_params());
    const MatX gx = net.backward(cache, w, grad);
    const VecX p = net.params();
    for (int k = 0; k < p.size(); ++k) {
      VecX pp = p, pm = p;
      pp[k] += 1e-6;
      pm[k] -= 1e-6;
      Mlp a = net, b = net;
      a.set_params(pp);
      b.set_params(pm);
      const double fd = (a.forward(x).cwiseProduct(w).sum() - b.forward(x).cwiseProduct(w).sum()) / 2e-6;
      CHECK(std::abs(fd - grad[k]) <= 1e-4 * std::max(1.0, std::abs(fd)));
    }
    for (int r = 0; r < 3; ++r) {
      MatX xp = x, xm = x;
      xp(r, 0) += 1e-6;
      xm(r, 0) -= 1e-6;
      const double fd = (net.forward(xp).cwiseProduct(w).sum() - net.forward(xm).cwiseProduct(w).sum()) / 2e-6;
      CHECK(std::abs(fd - gx(r, 0)) <= 1e-4 * std::max(1.0, std::abs(fd)));
    }
  });
}

TEST_CASE("mlp flat parameters round trip and json") {
  std::mt19937_64 rng(1);
  Mlp net({4, 7, 2}, rng);
  const VecX p = net.params();
  Mlp copy({4, 7, 2});
  copy.set_params(p);
  CHECK(copy.params() == p);
  CHECK(mlp_from_json(to_json(net)).params() == p);
  CHECK_THROWS(copy.set_params(VecX::Zero(3)));
}

TEST_CASE("non-finite activations are reported") {
  Mlp net({1, 2, 1});
  MatX x(1, 1);
  x(0, 0) = std::nan("");
  CHECK_THROWS_AS(net.forward(x), TrainingDiverged);
}

TEST_CASE("adam moves against the gradient by about lr") {
  Adam opt(3, AdamConfig{});
  VecX p = VecX::Zero(3);
  const VecX g = (VecX(3) << 1.0, -2.0, 0.5).finished();
  opt.step(p, g);
  CHECK(p[0] == doctest::Approx(-5e-4).epsilon(1e-3));
  CHECK(p[1] == doctest::Approx(5e-4).epsilon(1e-3));
  CHECK(opt.steps() == 1);
}

TEST_CASE("running normalizer") {
  RunningNormalizer c(2);
  for (int i = 0; i < 100; ++i) c.update(VecX::Constant(2, 3.0));
  CHECK(c.normalize(VecX::Constant(2, 3.0)).isZero());
  CHECK(c.normalize(VecX::Constant(2, 4.0)).allFinite());

  RunningNormalizer n(1);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> d(5.0, 2.0);
  std::vector<double> xs(100000);
  for (auto& x : xs) {
    x = d(rng);
    n.update(VecX::Constant(1, x));
  }
  double m = 0.0, s = 0.0;
  for (double x : xs) m += n.normalize(VecX::Constant(1, x))[0];
  m /= static_cast<double>(xs.size());
  for (double x : xs) s += std::pow(n.normalize(VecX::Constant(1, x))[0] - m, 2);
  s = std::sqrt(s / static_cast<double>(xs.size()));
  CHECK(std::abs(m) < 0.05);
  CHECK(s >= 0.95);
  CHECK(s <= 1.05);
  CHECK(std::abs(n.normalize(VecX::Constant(1, 1e6))[0]) == 10.0);

  const RunningNormalizer back = RunningNormalizer::from_json(n.to_json());
  CHECK(back.mean() == n.mean());
  CHECK(back.count() == n.count());

  RunningNormalizer f(1);
  f.frozen = true;
  f.update(VecX::Constant(1, 4.0));
  CHECK(f.count() == 0.0);
}

TEST_CASE("gae examples") {
  const VecX r = (VecX(4) << 1, 2, 3, 4).finished();
  const VecX v = (VecX(4) << 0.5, -1, 2, 0.1).finished();
  const VecX vn = (VecX(4) << -1, 2, 0.1, 3).finished();
  const std::vector<bool> none(4, false);

  const GaeResult one = gae(r, v, vn, none, none, 0.0, 0.95);
  CHECK((one.advantages - (r - v)).norm() < 1e-12);

  const GaeResult sums = gae(r, VecX::Zero(4), VecX::Zero(4), none, none, 1.0, 1.0);
  CHECK((sums.advantages - (VecX(4) << 10, 9, 7, 4).finished()).norm() < 1e-12);

  std::vector<bool> term(4, false);
  term[3] = true;
  const GaeResult t = gae(r, v, vn, term, term, 0.99, 0.95);
  CHECK(t.advantages[3] == doctest::Approx(r[3] - v[3]));

  std::vector<bool> trunc(4, false);
  trunc[3] = true;
  const GaeResult tr = gae(r, v, vn, none, trunc, 0.99, 0.95);
  CHECK(tr.advantages[3] == doctest::Approx(r[3] + 0.99 * vn[3] - v[3]));
  CHECK((tr.returns - (tr.advantages + v)).norm() < 1e-12);
}

TEST_CASE("gae property: matches the defining sum without boundaries") {
  for_all(100, 52, [](Gen& g) {
    const int n = g.integer(1, 30);
    VecX r(n), v(n), vn(n);
    for (int i = 0; i < n; ++i) {
      r[i] = g.normal();
      v[i] = g.normal();
    }
    for (int i = 0; i < n; ++i) vn[i] = i + 1 < n ? v[i + 1] : g.normal();
    const double gamma = g.uniform(0, 1), lambda = g.uniform(0, 1);
    const std::vector<bool> none(static_cast<size_t>(n), false);
    CHECK((gae(r, v, vn, none, none, gamma, lambda).advantages - gae_oracle(r, v, vn, gamma, lambda)).norm() < 1e-9);
    VecX vb(n + 1);
    vb << v, vn[n - 1];
    CHECK((gae(r, vb, none, gamma, lambda).advantages - gae_oracle(r, v, vn, gamma, lambda)).norm() < 1e-9);
  });
}

TEST_CASE("ppo loss at identical parameters") {
  Gen g(53);
  ActorCritic net(4, 2, {8}, g.rng, 0.7);
  const PpoBatch b = random_batch(g, net, 16, 0.0);
  const PpoLoss l = ppo_loss(net, b, PpoHypers{});
  CHECK(l.clip_fraction == 0.0);
  CHECK(std::abs(l.approx_kl) < 1e-12);
  CHECK(l.policy == doctest::Approx(-b.advantages.mean()));
}

TEST_CASE("clipped terms have zero policy gradient") {
  Gen g(54);
  ActorCritic net(3, 1, {6}, g.rng, 0.5);
  PpoBatch b = random_batch(g, net, 12, -0.5);  // ratio = e^0.5 > 1 + clip
  b.advantages = b.advantages.cwiseAbs() + VecX::Constant(12, 0.1);
  PpoHypers h;
  h.value_coef = 0.0;
  VecX grad;
  const PpoLoss l = ppo_loss(net, b, h, &grad);
  CHECK(l.clip_fraction == 1.0);
  CHECK(grad.norm() == 0.0);
}

TEST_CASE("ppo gradient matches central differences") {
  for_all(5, 55, [](Gen& g) {
    ActorCritic net(3, 2, {5}, g.rng, 0.8);
    net.set_params(net.params() + 0.3 * VecX::Random(net.num_params()));
    const PpoBatch b = random_batch(g, net, 10, 0.05);
    PpoHypers h;
    h.entropy_coef = 0.01;
    VecX grad;
    ppo_loss(net, b, h, &grad);
    const VecX p = net.params();
    for (int k = 0; k < p.size(); ++k) {
      ActorCritic a = net, c = net;
      VecX pp = p, pm = p;
      pp[k] += 1e-6;
      pm[k] -= 1e-6;
      a.set_params(pp);
      c.set_params(pm);
      const double fd = (ppo_loss(a, b, h).total - ppo_loss(c, b, h).total) / 2e-6;
      CHECK(std::abs(fd - grad[k]) <= 1e-5 * std::max(1.0, std::abs(fd)));
    }
  });
}

TEST_CASE("std floor is enforced after updates") {
  Gen g(56);
  ActorCritic net(2, 2, {4}, g.rng, 0.1);
  net.clamp_std(0.2);
  CHECK(net.stddev().minCoeff() >= 0.2 - 1e-12);
  CHECK(actor_critic_from_json(to_json(net)).params() == net.params());
}

TEST_CASE("hyperparameter defaults and json") {
  const PpoHypers h;
  CHECK(h.n_envs == 240);
  CHECK(h.clip == 0.2);
  CHECK(h.steps_per_batch == 400);
  CHECK(h.gae_lambda == 0.95);
  CHECK(h.epochs == 4);
  CHECK(h.lr == 5e-4);
  CHECK(h.minibatches == 4);
  CHECK(h.min_std == 0.2);
  CHECK(h.gamma == 0.99);
  const PpoHypers o = ppo_hypers_from_json({{"epochs", 2}, {"hidden", {32, 16}}});
  CHECK(o.epochs == 2);
  CHECK(o.hidden == std::vector<int>{32, 16});
  CHECK(ppo_hypers_from_json(to_json(h)).hidden == h.hidden);
}

TEST_CASE("observation layouts") {
  const ObservationL zero = build_obs_l({}, {}, Vec3::Zero());
  CHECK(zero.size() == 69);
  for (int i = 0; i < 69; ++i) CHECK(zero[i] == (i == 18 ? 1.0 : 0.0));

  Gen g(57);
  BetaL b;
  b.contact_ref = g.contacts();
  b.px = Vec4::Random();
  b.py = Vec4::Random();
  b.pz = Vec4::Random();
  const BetaL back = beta_l_from_obs(build_obs_l(b, {}, g.vec3()));
  CHECK(back.contact_ref == b.contact_ref);
  CHECK(back.px == b.px);
  CHECK(back.pz == b.pz);

  const ObservationG og = build_obs_g({}, {}, Vec3(0.3, 0, 0), Vec3::Zero(), 2.4);
  CHECK(og.size() == 67);
  CHECK(og[66] == 2.4);
  CHECK(command_acceleration(Vec3(1, 2, 3), Vec3(1, 2, 3), 0.01).isZero());
  CHECK(command_acceleration(Vec3(1, 0, 0), Vec3::Zero(), 0.01).x() == doctest::Approx(100.0));

  BetaL w;
  w.px = Vec4::Constant(2.0);
  w.py = Vec4::Constant(1.0);
  const BetaL rel = beta_l_relative(w, Vec3(1, 1, 0), M_PI / 2);
  CHECK(rel.px[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(rel.py[0] == doctest::Approx(-1.0));
}

TEST_CASE("randomization clamps and means") {
  std::mt19937_64 rng(58);
  const RandomizationConfig cfg;
  double t_acc_sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double mu = cfg.friction.sample(rng);
    CHECK((mu >= 0.4 && mu <= 1.0));
    const double kp = cfg.kp_scale.sample(rng);
    CHECK((kp >= 0.9 && kp <= 1.1));
    t_acc_sum += cfg.t_acc.sample(rng);
  }
  CHECK(t_acc_sum / 1e5 == doctest::Approx(0.25).epsilon(0.04));
}

TEST_CASE("command schedule") {
  CHECK_THROWS_AS(CommandSchedule({{1.0, 0, Vec3::Zero(), GaitId::Trot}, {1.0, 0, Vec3::Zero(), GaitId::Run}}), InvalidInput);
  const CommandSchedule s({{0.0, 0.0, Vec3(0.2, 0, 0), GaitId::Trot}, {1.0, 0.5, Vec3(1.2, 0, 0), GaitId::Run}});
  CHECK(s.at(0.5).velocity.x() == 0.2);
  CHECK(s.at(1.25).velocity.x() == doctest::Approx(0.7));
  CHECK(s.at(1.25).gait == GaitId::Run);
  CHECK(s.at(3.0).velocity.x() == 1.2);

  std::mt19937_64 rng(59);
  const EpisodeConfig ep = sample_episode_config(rng, {}, 10.0);
  CHECK(ep.commands.segments().front().start == 0.0);
  CHECK(ep.commands.segments().back().start < 10.0);
  for (const auto& seg : ep.commands.segments()) {
    CHECK(gait_index(seg.gait) <= 6);
    CHECK((seg.velocity.x() >= 0.0 && seg.velocity.x() <= 1.5));
  }
  const RobotModel m = apply_episode(RobotModel{}, ep);
  CHECK(m.base_mass == doctest::Approx(12.0 + ep.mass_offset));
}

TEST_CASE("bandit converges to the optimum") {
  TrainConfig tc;
  tc.hypers.n_envs = 8;
  tc.hypers.steps_per_batch = 16;
  tc.hypers.hidden = {16};
  tc.iterations = 200;
  tc.seed = 3;
  const TrainResult r = train([](int) { return std::make_unique<BanditEnv>(0.7); }, tc);
  CHECK_FALSE(r.diverged);
  CHECK(policy_action(r.net, r.obs_norm, VecX::Ones(1))[0] == doctest::Approx(0.7).epsilon(0.1 / 0.7));
}

TEST_CASE("training smoke run with logging and checkpoints") {
  const auto dir = std::filesystem::temp_directory_path() / "gaitlab_train_smoke";
  std::filesystem::create_directories(dir);
  TrainConfig tc;
  tc.hypers.n_envs = 2;
  tc.hypers.steps_per_batch = 8;
  tc.hypers.hidden = {16, 16};
  tc.iterations = 10;
  tc.checkpoint_every = 5;
  tc.kind = "loco";
  tc.log_csv = (dir / "log.csv").string();
  tc.checkpoint_path = (dir / "ckpt.json").string();
  const TrainResult r = train([](int) { return std::make_unique<LocoEnv>(); }, tc);
  REQUIRE(r.log.size() == 10);
  for (size_t i = 0; i < r.log.size(); ++i) CHECK(r.log[i].iteration == static_cast<int>(i));
  CHECK(r.term_names == std::vector<std::string>{"r_eta", "r_v", "r_f", "r_stab"});
  const Checkpoint c = load_checkpoint(tc.checkpoint_path);
  CHECK(c.kind == "loco");
  CHECK(c.net.obs_dim() == kObsLSize);
  CHECK(c.net.params() == r.net.params());
  std::filesystem::remove_all(dir);
}

TEST_CASE("locomotion env is reproducible per seed") {
  LocoEnv a, b;
  const VecX oa = a.reset(17), ob = b.reset(17);
  CHECK(oa == ob);
  const VecX act = VecX::Constant(12, 0.1);
  for (int k = 0; k < 20; ++k) {
    const StepResult ra = a.step(act), rb = b.step(act);
    CHECK(ra.reward == rb.reward);
    CHECK(ra.obs == rb.obs);
  }
}

TEST_CASE("policy controller adds scaled, clipped offsets to the reference pose") {
  LocoEnv env;
  env.reset(1);
  const LocomotionStack& st = env.stack();
  PolicyController pc(st.config().model);
  ControlContext ctx;
  ctx.truth = &st.sim().state();
  ctx.beta_l = &st.beta_l();
  const Vec12 ref = reference_joint_positions(st.sim().state(), st.beta_l(), st.config().model);
  CHECK(pc.compute(ctx) == ref);
  pc.set_action(VecX::Constant(12, 5.0));
  CHECK((pc.compute(ctx) - ref - Vec12::Constant(0.5)).norm() < 1e-12);
}

TEST_CASE("gait env rewards follow the selection reward") {
  GaitEnvConfig cfg;
  cfg.terrain_levels = {0};
  GaitEnv env(cfg);
  const VecX obs = env.reset(5);
  CHECK(obs.size() == kObsGSize);
  VecX a(1);
  a[0] = 1.0;
  const StepResult r = env.step(a);
  REQUIRE(r.terms.size() == 7);
  const double r_u = r.terms[0] + r.terms[1] + r.terms[2];
  CHECK(r.reward == doctest::Approx(0.4 * r_u + r.terms[3] + r.terms[4] + r.terms[5] + r.terms[6]));
}

}
