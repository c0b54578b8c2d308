#include "gaitlab/locomotion.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

namespace gaitlab {

LocomotionStack::LocomotionStack(StackConfig cfg, std::shared_ptr<const Terrain> terrain,
                                 std::unique_ptr<LocomotionController> controller, GaitId initial,
                                 std::uint64_t seed, const SimState* initial_state)
    : cfg_(std::move(cfg)),
      sim_(initial_state ? Simulator(cfg_.model, terrain, cfg_.sim, *initial_state)
                         : Simulator(cfg_.model, terrain, cfg_.sim)),
      scheduler_(cfg_.gaits, cfg_.model.scheduler_config(), initial, sim_.time(), sim_.state().body_state(),
                 [t = terrain.get()](double x, double y) { return t->height(x, y); }),
      estimator_(cfg_.model, cfg_.estimator),
      controller_(std::move(controller)),
      rng_(seed),
      touchdowns_(kNumLegs) {
  if (!controller_) throw InvalidInput("LocomotionStack: controller must not be null");
  if (cfg_.control_decimation < 1 || cfg_.selection_decimation % cfg_.control_decimation != 0) {
    throw InvalidInput("LocomotionStack: selection decimation must be a multiple of control decimation");
  }
  cmd_.gait = initial;
  estimator_.reset(sim_.state());
  energy_.absolute = cfg_.energy_absolute;
  const SimState& s = sim_.state();
  energy_.reset(s.time, kinetic_energy(cfg_.model.base_mass, cfg_.model.base_inertia, s.linear_velocity, s.angular_velocity),
                potential_energy(cfg_.model.base_mass, s.position.z()));
  prev_contact_ = s.contact;
  q_star_ = s.q;
}

LocomotionStack::LocomotionStack(const LocomotionStack& o)
    : cfg_(o.cfg_),
      sim_(o.sim_),
      scheduler_(o.scheduler_),
      estimator_(o.estimator_),
      controller_(o.controller_->clone()),
      rng_(o.rng_),
      cmd_(o.cmd_),
      beta_l_(o.beta_l_),
      beta_g_(o.beta_g_),
      q_star_(o.q_star_),
      energy_(o.energy_),
      touchdowns_(o.touchdowns_),
      prev_contact_(o.prev_contact_),
      power_sum_(o.power_sum_),
      tau_pct_sum_(o.tau_pct_sum_),
      physics_count_(o.physics_count_),
      contact_err_sum_(o.contact_err_sum_),
      control_count_(o.control_count_),
      velocity_sum_(o.velocity_sum_),
      planar_err_sum_(o.planar_err_sum_) {}

LocomotionStack& LocomotionStack::operator=(const LocomotionStack& o) {
  if (this != &o) {
    LocomotionStack copy(o);
    *this = std::move(copy);
  }
  return *this;
}

HeightFn LocomotionStack::height_fn() const {
  return [t = &sim_.terrain()](double x, double y) { return t->height(x, y); };
}

Vec3 LocomotionStack::tracked_velocity() const {
  const SimState& s = sim_.state();
  const Vec3 v = yaw_rotation(yaw_of(s.rotation)).transpose() * s.linear_velocity;
  return {v.x(), v.y(), s.world_angular_velocity().z()};
}

bool LocomotionStack::fallen() const {
  const SimState& s = sim_.state();
  const double ground = sim_.terrain().height(s.position.x(), s.position.y());
  const double roll = std::atan2(s.rotation(2, 1), s.rotation(2, 2));
  const double pitch = -std::asin(std::clamp(s.rotation(2, 0), -1.0, 1.0));
  return s.position.z() - ground < 0.12 || std::abs(roll) > 1.0 || std::abs(pitch) > 1.0;
}

void LocomotionStack::control_step() {
  const RobotModel& model = cfg_.model;
  {
    const SimState& s = sim_.state();
    std::tie(beta_l_, beta_g_) = scheduler_.step(s.time, s.body_state(), cmd_, height_fn());

    const double ek = kinetic_energy(model.base_mass, model.base_inertia, s.linear_velocity, s.angular_velocity);
    const double ep = potential_energy(model.base_mass, s.position.z());
    energy_.step(ek, ep);
    if (scheduler_.state().cycle_wrapped) energy_.close_cycle(s.time);

    contact_err_sum_ += contact_error(s.contact, beta_l_.contact_ref).average;
    ++control_count_;

    ControlContext ctx;
    ctx.truth = &s;
    ctx.estimate = &estimator_.output();
    ctx.beta_l = &beta_l_;
    ctx.scheduler = &scheduler_.state();
    ctx.velocity_cmd = cmd_.velocity;
    ctx.dt = cfg_.control_decimation * cfg_.sim.dt;
    q_star_ = controller_->compute(ctx);
  }

  for (int k = 0; k < cfg_.control_decimation; ++k) {
    sim_.step(q_star_);
    const SimState& s = sim_.state();
    double power = 0.0;
    for (int j = 0; j < kNumJoints; ++j) {
      power += std::max(s.tau[j] * s.qd[j] + kHeatCoefficient * s.tau[j] * s.tau[j], 0.0);
    }
    power_sum_ += power;
    tau_pct_sum_ += torque_saturation(s.tau, model.torque_limit);
    ++physics_count_;
    const Vec3 v = tracked_velocity();
    velocity_sum_ += v;
    planar_err_sum_ += (v.head<2>() - cmd_.velocity.head<2>()).norm();
    for (size_t i = 0; i < kNumLegs; ++i) {
      if (s.contact[i] && !prev_contact_[i]) touchdowns_[i].push_back(s.time);
    }
    prev_contact_ = s.contact;
    estimator_.update(read_sensors(s, cfg_.noise, rng_, cfg_.sim.gravity), cfg_.sim.dt);
  }
}

SelectionStep LocomotionStack::selection_step() {
  power_sum_ = tau_pct_sum_ = contact_err_sum_ = planar_err_sum_ = 0.0;
  physics_count_ = control_count_ = 0;
  velocity_sum_.setZero();
  const int n = cfg_.selection_decimation / cfg_.control_decimation;
  for (int i = 0; i < n; ++i) control_step();

  SelectionStep out;
  const double t = sim_.time();
  const double speed = cmd_.velocity.head<2>().norm();
  out.metrics.time = t;
  if (speed >= cfg_.min_cot_speed) {
    out.metrics.cot = power_sum_ / physics_count_ / (cfg_.model.base_mass * kGravity * speed);
  }
  out.metrics.tau_pct = tau_pct_sum_ / physics_count_;
  out.metrics.c_avg_err = contact_err_sum_ / control_count_;
  out.metrics.w_ext = energy_.last_cycle;
  out.metrics.stride_cv = stride_cv(touchdowns_, t - cfg_.stride_window, t);
  out.velocity = velocity_sum_ / physics_count_;
  out.planar_error = planar_err_sum_ / physics_count_;
  out.gait = scheduler_.state().active_id;
  out.transitioning = scheduler_.state().transitioning;
  return out;
}

}  // namespace gaitlab
