#include "gaitlab/state_estimator.hpp"

#include <cmath>

namespace gaitlab {

Eigen::Matrix<double, RobotStateS::kSize, 1> RobotStateS::flatten() const {
  Eigen::Matrix<double, kSize, 1> out;
  Vec4 c;
  for (int i = 0; i < kNumLegs; ++i) c[i] = contact[static_cast<size_t>(i)] ? 1.0 : 0.0;
  out << gravity_axis, q, omega, qd, v_b, z, tau, c;
  return out;
}

RobotStateS true_robot_state(const SimState& s, double contact_threshold) {
  RobotStateS out;
  out.gravity_axis = s.rotation.transpose() * Vec3::UnitZ();
  out.q = s.q;
  out.omega = s.angular_velocity;
  out.qd = s.qd;
  out.v_b = s.rotation.transpose() * s.linear_velocity;
  out.z = s.position.z();
  out.tau = s.tau;
  for (int i = 0; i < kNumLegs; ++i) out.contact[static_cast<size_t>(i)] = s.f_grf[i] > contact_threshold;
  return out;
}

EstimatorState se_step(const EstimatorState& est, const SensorVector& sigma, double dt,
                       const RobotModel& model, const EstimatorConfig& cfg, ContactSet* contact_out) {
  if (!(dt > 0.0)) throw InvalidInput("se_update: dt must be positive");
  EstimatorState n = est;

  Mat3 r = est.rotation * exp_so3(sigma.omega * dt);
  const double a_norm = sigma.accel.norm();
  if (a_norm > 1e-9 && std::abs(a_norm - cfg.gravity) < cfg.accel_gate * cfg.gravity) {
    const Vec3 up_measured = sigma.accel / a_norm;
    const Vec3 up_predicted = r.transpose() * Vec3::UnitZ();
    r = r * exp_so3(cfg.orientation_gain * up_measured.cross(up_predicted));
  }
  n.rotation = Eigen::Quaterniond(r).normalized().toRotationMatrix();

  ContactSet contact{};
  Vec3 v_odo = Vec3::Zero();
  double z_kin = 0.0;
  int n_stance = 0;
  for (int i = 0; i < kNumLegs; ++i) {
    const auto k = static_cast<size_t>(i);
    contact[k] = sigma.f_grf[i] > cfg.contact_threshold;
    if (!contact[k]) continue;
    const Vec3 ql = leg_joints(sigma.q, i);
    const Vec3 rel = model.hip_offsets[k] + leg_fk(ql, model, i);
    const Vec3 rel_dot = sigma.omega.cross(rel) + leg_jacobian(ql, model, i) * sigma.qd.segment<3>(3 * i);
    v_odo -= n.rotation * rel_dot;
    z_kin -= (n.rotation * rel).z();
    ++n_stance;
  }

  const Vec3 a_world = n.rotation * sigma.accel - Vec3(0.0, 0.0, cfg.gravity);
  const Vec3 v_pred = est.velocity + dt * a_world;
  if (n_stance > 0) {
    v_odo /= n_stance;
    z_kin /= n_stance;
    n.velocity = cfg.odometry_blend * v_odo + (1.0 - cfg.odometry_blend) * v_pred;
  } else {
    n.velocity = v_pred;
  }
  const double z_pred = est.z + dt * n.velocity.z();
  n.z = n_stance > 0 ? cfg.odometry_blend * z_kin + (1.0 - cfg.odometry_blend) * z_pred : z_pred;

  if (contact_out) *contact_out = contact;
  return n;
}

RobotStateS se_output(const EstimatorState& est, const SensorVector& sigma, const EstimatorConfig& cfg) {
  RobotStateS out;
  out.gravity_axis = est.rotation.transpose() * Vec3::UnitZ();
  out.q = sigma.q;
  out.omega = sigma.omega;
  out.qd = sigma.qd;
  out.v_b = est.rotation.transpose() * est.velocity;
  out.z = est.z;
  out.tau = sigma.tau;
  for (int i = 0; i < kNumLegs; ++i) out.contact[static_cast<size_t>(i)] = sigma.f_grf[i] > cfg.contact_threshold;
  return out;
}

StateEstimator::StateEstimator(RobotModel model, EstimatorConfig cfg)
    : model_(std::move(model)), cfg_(cfg) {}

void StateEstimator::reset(const SimState& initial) {
  est_.rotation = initial.rotation;
  est_.velocity = initial.linear_velocity;
  est_.z = initial.position.z();
  out_ = true_robot_state(initial, cfg_.contact_threshold);
}

RobotStateS StateEstimator::update(const SensorVector& sigma, double dt) {
  est_ = se_step(est_, sigma, dt, model_, cfg_);
  out_ = se_output(est_, sigma, cfg_);
  return out_;
}

}  // namespace gaitlab
