#include "gaitlab/quad_sim.hpp"

#include <algorithm>
#include <cmath>

namespace gaitlab {

namespace {

Vec3 euler_rhs(const Vec3& w, const Mat3& inertia, const Mat3& inertia_inv, const Vec3& torque) {
  return inertia_inv * (torque - w.cross(inertia * w));
}

Mat3 orthonormalise(const Mat3& r) {
  return Eigen::Quaterniond(r).normalized().toRotationMatrix();
}

}  // namespace

SimConfig sim_config_from_json(const nlohmann::json& doc, SimConfig base) {
  SimConfig c = base;
  c.dt = doc.value("dt", c.dt);
  c.contact_stiffness = doc.value("contact_stiffness", c.contact_stiffness);
  c.contact_damping = doc.value("contact_damping", c.contact_damping);
  c.tangential_stiffness = doc.value("tangential_stiffness", c.tangential_stiffness);
  c.tangential_damping = doc.value("tangential_damping", c.tangential_damping);
  c.contact_threshold = doc.value("contact_threshold", c.contact_threshold);
  if (doc.contains("friction")) c.friction = doc.at("friction").get<double>();
  if (doc.contains("gravity")) {
    const auto g = doc.at("gravity").get<std::vector<double>>();
    if (g.size() != 3) throw InvalidInput("sim config: gravity needs 3 values");
    c.gravity = Vec3(g[0], g[1], g[2]);
  }
  if (!(c.dt > 0.0) || c.contact_stiffness < 0.0 || c.contact_damping < 0.0) {
    throw InvalidModel("sim config: dt must be positive and contact constants non-negative");
  }
  return c;
}

BodyState SimState::body_state() const {
  BodyState b;
  b.position = position;
  b.rotation = rotation;
  b.linear_velocity = linear_velocity;
  b.angular_velocity = world_angular_velocity();
  b.feet = feet;
  return b;
}

Vec12 pd_torques(const Vec12& q_star, const Vec12& q, const Vec12& qd, const RobotModel& model) {
  const Vec12 tau = model.kp * (q_star - q) - model.kd * qd;
  return tau.cwiseMax(-model.torque_limit).cwiseMin(model.torque_limit);
}

void update_foot_kinematics(SimState& s, const RobotModel& model) {
  for (int i = 0; i < kNumLegs; ++i) {
    const auto k = static_cast<size_t>(i);
    const Vec3 ql = leg_joints(s.q, i);
    const Vec3 r = model.hip_offsets[k] + leg_fk(ql, model, i);
    const Vec3 rd = s.angular_velocity.cross(r) + leg_jacobian(ql, model, i) * s.qd.segment<3>(3 * i);
    s.feet[k] = s.position + s.rotation * r;
    s.foot_velocities[k] = s.linear_velocity + s.rotation * rd;
  }
}

ContactForces contact_forces(const SimState& s, const Terrain& terrain, const SimConfig& cfg) {
  ContactForces out;
  const double mu = cfg.friction.value_or(terrain.friction);
  for (size_t i = 0; i < kNumLegs; ++i) {
    const Vec3& p = s.feet[i];
    const Vec3& v = s.foot_velocities[i];
    const double depth = terrain.height(p.x(), p.y()) - p.z();
    if (depth <= 0.0) {
      out.anchored[i] = false;
      continue;
    }
    const double fn = std::max(0.0, cfg.contact_stiffness * depth - cfg.contact_damping * v.z());
    Vec2 anchor = s.anchored[i] ? s.anchors[i] : Vec2(p.head<2>());
    Vec2 ft = -cfg.tangential_stiffness * (p.head<2>() - anchor) - cfg.tangential_damping * v.head<2>();
    const double cap = mu * fn;
    const double mag = ft.norm();
    if (mag > cap) {
      ft = mag > 0.0 ? Vec2(ft * (cap / mag)) : Vec2::Zero();
      // Slide the anchor so the spring is consistent with the capped force.
      if (cfg.tangential_stiffness > 0.0) {
        anchor = p.head<2>() + (ft + cfg.tangential_damping * v.head<2>()) / cfg.tangential_stiffness;
      }
    }
    out.force[i] = Vec3(ft.x(), ft.y(), fn);
    out.normal[static_cast<Eigen::Index>(i)] = fn;
    out.anchors[i] = anchor;
    out.anchored[i] = true;
  }
  return out;
}

SimState step_dynamics(const SimState& s, const Vec12& tau_in, double dt, const RobotModel& model,
                       const Terrain& terrain, const SimConfig& cfg) {
  if (!(dt > 0.0)) throw InvalidInput("step_dynamics: dt must be positive");
  const Vec12 tau = tau_in.cwiseMax(-model.torque_limit).cwiseMin(model.torque_limit);
  const ContactForces cf = contact_forces(s, terrain, cfg);

  Vec3 force = model.base_mass * cfg.gravity;
  Vec3 moment = Vec3::Zero();
  for (size_t i = 0; i < kNumLegs; ++i) {
    force += cf.force[i];
    moment += (s.feet[i] - s.position).cross(cf.force[i]);
  }

  SimState n = s;
  n.tau = tau;
  n.linear_velocity = s.linear_velocity + dt * force / model.base_mass;
  // Constant gravity is integrated exactly; contact forces semi-implicitly.
  n.position = s.position + dt * n.linear_velocity - 0.5 * dt * dt * cfg.gravity;
  n.linear_acceleration = (n.linear_velocity - s.linear_velocity) / dt;

  const Mat3& inertia = model.base_inertia;
  const Mat3 inertia_inv = inertia.inverse();
  const Vec3 torque_b = s.rotation.transpose() * moment;
  const Vec3& w = s.angular_velocity;
  const Vec3 k1 = euler_rhs(w, inertia, inertia_inv, torque_b);
  const Vec3 k2 = euler_rhs(w + 0.5 * dt * k1, inertia, inertia_inv, torque_b);
  const Vec3 k3 = euler_rhs(w + 0.5 * dt * k2, inertia, inertia_inv, torque_b);
  const Vec3 k4 = euler_rhs(w + dt * k3, inertia, inertia_inv, torque_b);
  n.angular_velocity = w + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  n.rotation = orthonormalise(s.rotation * exp_so3(n.angular_velocity * dt));

  for (int i = 0; i < kNumLegs; ++i) {
    const auto k = static_cast<size_t>(i);
    const Vec3 f_base = s.rotation.transpose() * cf.force[k];
    const Mat3 j = leg_jacobian(leg_joints(s.q, i), model, i);
    const Vec3 qdd = (tau.segment<3>(3 * i) + j.transpose() * f_base) / model.leg_inertia;
    n.qd.segment<3>(3 * i) = s.qd.segment<3>(3 * i) + dt * qdd;
  }
  n.q = s.q + dt * n.qd;

  n.foot_forces = cf.force;
  n.f_grf = cf.normal;
  n.anchors = cf.anchors;
  n.anchored = cf.anchored;
  for (int i = 0; i < kNumLegs; ++i) n.contact[static_cast<size_t>(i)] = cf.normal[i] > cfg.contact_threshold;
  n.time = s.time + dt;
  update_foot_kinematics(n, model);

  if (!all_finite(n.position) || !all_finite(n.linear_velocity) || !all_finite(n.angular_velocity) ||
      !all_finite(n.rotation) || !all_finite(n.q) || !all_finite(n.qd)) {
    throw SimulationDiverged("simulation state became non-finite at t=" + std::to_string(n.time));
  }
  return n;
}

SimState standing_state(const RobotModel& model, const Terrain& terrain, double x, double y, double yaw) {
  SimState s;
  s.rotation = yaw_rotation(yaw);
  s.q = model.nominal_joint_positions();
  double ground = -1e9;
  for (int i = 0; i < kNumLegs; ++i) {
    const Vec3 foot = s.rotation * model.nominal_foot_base(i);
    ground = std::max(ground, terrain.height(x + foot.x(), y + foot.y()));
  }
  s.position = Vec3(x, y, ground + model.nominal_height);
  update_foot_kinematics(s, model);
  return s;
}

Vec12 stand_targets(const RobotModel& model, double g) {
  const Vec12 q = model.nominal_joint_positions();
  if (model.kp <= 0.0) return q;
  const Vec3 f(0.0, 0.0, model.base_mass * g / kNumLegs);
  Vec12 out = q;
  for (int i = 0; i < kNumLegs; ++i) {
    const Mat3 j = leg_jacobian(leg_joints(q, i), model, i);
    out.segment<3>(3 * i) -= j.transpose() * f / model.kp;
  }
  return out;
}

Simulator::Simulator(RobotModel model, std::shared_ptr<const Terrain> terrain, SimConfig cfg)
    : model_(std::move(model)), terrain_(std::move(terrain)), cfg_(cfg) {
  if (!terrain_) throw InvalidInput("Simulator: terrain must not be null");
  validate(model_);
  state_ = standing_state(model_, *terrain_);
}

Simulator::Simulator(RobotModel model, std::shared_ptr<const Terrain> terrain, SimConfig cfg,
                     const SimState& initial)
    : model_(std::move(model)), terrain_(std::move(terrain)), cfg_(cfg), state_(initial) {
  if (!terrain_) throw InvalidInput("Simulator: terrain must not be null");
  validate(model_);
  update_foot_kinematics(state_, model_);
}

void Simulator::step(const Vec12& q_star) {
  step_torque(pd_torques(q_star, state_.q, state_.qd, model_));
}

void Simulator::step_torque(const Vec12& tau) {
  state_ = step_dynamics(state_, tau, cfg_.dt, model_, *terrain_, cfg_);
}

double base_energy(const SimState& s, const RobotModel& model, double g) {
  const double ek = 0.5 * model.base_mass * s.linear_velocity.squaredNorm() +
                    0.5 * s.angular_velocity.dot(model.base_inertia * s.angular_velocity);
  return ek + model.base_mass * g * s.position.z();
}

}  // namespace gaitlab
