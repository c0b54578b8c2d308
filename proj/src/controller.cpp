#include "gaitlab/controller.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <numbers>

namespace gaitlab {

Vec12 torque_to_position_target(const Vec12& tau, const Vec12& q, const Vec12& qd, const RobotModel& model) {
  if (model.kp <= 0.0) throw InvalidModel("torque_to_position_target: Kp must be positive");
  return q + (tau + model.kd * qd) / model.kp;
}

ScriptedController::ScriptedController(RobotModel model, ScriptedControllerConfig cfg)
    : model_(std::move(model)), cfg_(cfg) {}

std::unique_ptr<LocomotionController> ScriptedController::clone() const {
  return std::make_unique<ScriptedController>(*this);
}

void ScriptedController::reset() {
  tau_des_.setZero();
  for (auto& f : f_des_) f.setZero();
  qd_des_prev_.setZero();
  has_prev_ = {};
}

Vec12 ScriptedController::compute(const ControlContext& ctx) {
  if (!ctx.truth || !ctx.beta_l || !ctx.scheduler) throw ContractViolation("ScriptedController: incomplete context");
  const SimState& s = *ctx.truth;
  const BetaL& beta = *ctx.beta_l;
  const GaitParams& gait = ctx.scheduler->effective;
  const Mat3& rot = s.rotation;
  const double m = model_.base_mass;

  std::array<bool, kNumLegs> stance{};
  int n_stance = 0;
  double ground = 0.0;
  for (size_t i = 0; i < kNumLegs; ++i) {
    stance[i] = beta.contact_ref[i] && s.f_grf[static_cast<Eigen::Index>(i)] > 0.0;
    if (stance[i]) {
      ++n_stance;
      ground += s.feet[i].z();
    }
  }

  Vec12 tau = Vec12::Zero();
  for (auto& f : f_des_) f.setZero();
  if (n_stance > 0) {
    ground /= n_stance;
    const double duty = gait.all_stance ? 1.0 : std::max(gait.duty_factor, 0.1);
    const double support = m * kGravity / (kNumLegs * duty);

    const Mat3 ryaw = yaw_rotation(yaw_of(rot));
    const Vec3 v_des = ryaw * Vec3(ctx.velocity_cmd.x(), ctx.velocity_cmd.y(), 0.0);
    const Vec3& v = s.linear_velocity;
    Vec3 accel;
    accel.head<2>() = cfg_.velocity_kp * (v_des - v).head<2>();
    const double a_xy = accel.head<2>().norm();
    if (a_xy > cfg_.max_accel) accel.head<2>() *= cfg_.max_accel / a_xy;
    accel.z() = cfg_.height_kp * (ground + model_.nominal_height - s.position.z()) - cfg_.height_kd * v.z();
    const Vec3 force = m * accel + Vec3(0.0, 0.0, n_stance * support);

    const Vec3 w = s.world_angular_velocity();
    const Vec3 tilt = (rot * Vec3::UnitZ()).cross(Vec3::UnitZ());
    Vec3 alpha = cfg_.orientation_kp * tilt;
    alpha.head<2>() -= cfg_.orientation_kd * w.head<2>();
    alpha.z() += cfg_.yaw_rate_kd * (ctx.velocity_cmd.z() - w.z());
    const Vec3 moment = rot * model_.base_inertia * rot.transpose() * alpha;

    const int cols = 3 * n_stance;
    MatX a = MatX::Zero(6, cols);
    Eigen::Matrix<double, 6, 1> wrench;
    wrench << force, cfg_.moment_weight * moment;
    std::array<int, kNumLegs> slot{};
    int c = 0;
    for (size_t i = 0; i < kNumLegs; ++i) {
      if (!stance[i]) continue;
      slot[i] = c;
      a.block<3, 3>(0, 3 * c) = Mat3::Identity();
      a.block<3, 3>(3, 3 * c) = cfg_.moment_weight * skew(s.feet[i] - s.position);
      ++c;
    }
    const MatX h = a.transpose() * a + cfg_.force_regularisation * MatX::Identity(cols, cols);
    const VecX f = h.ldlt().solve(a.transpose() * wrench);

    for (int i = 0; i < kNumLegs; ++i) {
      const auto k = static_cast<size_t>(i);
      if (!stance[k]) continue;
      Vec3 fi = f.segment<3>(3 * slot[k]);
      fi.z() = std::max(fi.z(), 0.0);
      const double cap = cfg_.friction * fi.z();
      const double fxy = fi.head<2>().norm();
      if (fxy > cap) fi.head<2>() *= cap / fxy;
      f_des_[k] = fi;
      const Mat3 j = leg_jacobian(leg_joints(s.q, i), model_, i);
      tau.segment<3>(3 * i) = -j.transpose() * (rot.transpose() * fi) - cfg_.stance_damping * s.qd.segment<3>(3 * i);
    }
  }

  // Swing feedforward differentiates the ease profile only, not the moving foothold, so
  // the reference foot arrives with zero ground-relative horizontal speed.
  const SchedulerConfig sc = model_.scheduler_config();
  const Footholds targets = raibert_footholds(s.body_state(), ctx.velocity_cmd, gait, beta.contact_ref, sc);
  const double swing_time = (1.0 - gait.duty_factor) * gait.period;
  for (int i = 0; i < kNumLegs; ++i) {
    const auto k = static_cast<size_t>(i);
    if (stance[k]) {
      has_prev_[k] = false;
      continue;
    }
    Vec3 foot_des = beta.foot(i);
    // Late touchdown: reach below the ground until contact is made.
    if (beta.contact_ref[k]) foot_des.z() -= cfg_.touchdown_probe;
    const Vec3 r = rot.transpose() * (foot_des - s.position);
    const Vec3 ql = leg_joints(s.q, i);
    const Vec3 q_des = leg_ik(r - model_.hip_offsets[k], model_, i).q;

    Vec3 v_ff = Vec3::Zero();
    // Near-unit duty (blending into stand) makes the swing rate blow up; fall back to PD.
    if (!beta.contact_ref[k] && gait.duty_factor < cfg_.max_feedforward_duty) {
      const double u = std::clamp((ctx.scheduler->phases[k] - gait.duty_factor) / (1.0 - gait.duty_factor), 0.0, 1.0);
      const double rate = 1.0 / swing_time;
      const Vec2 span = Vec2(targets.x[i], targets.y[i]) - ctx.scheduler->liftoff[k];
      v_ff.head<2>() = 6.0 * u * (1.0 - u) * rate * span;
      v_ff.z() = sc.swing_height_ratio * sc.nominal_height * std::numbers::pi * std::cos(std::numbers::pi * u) * rate;
    }
    const Vec3 rel = rot.transpose() * (v_ff - s.linear_velocity) - s.angular_velocity.cross(r);
    const Eigen::PartialPivLU<Mat3> lu(leg_jacobian(ql, model_, i));
    Vec3 qd_des = Vec3::Zero();
    if (std::abs(lu.determinant()) > 1e-4) qd_des = lu.solve(rel);
    Vec3 ff = Vec3::Zero();
    if (has_prev_[k]) ff = cfg_.swing_inertia_ff * model_.leg_inertia * (qd_des - qd_des_prev_.segment<3>(3 * i)) / ctx.dt;
    qd_des_prev_.segment<3>(3 * i) = qd_des;
    has_prev_[k] = true;
    tau.segment<3>(3 * i) = ff + cfg_.swing_kp * (q_des - ql) + cfg_.swing_kd * (qd_des - s.qd.segment<3>(3 * i));
  }

  tau_des_ = tau.cwiseMax(-model_.torque_limit).cwiseMin(model_.torque_limit);
  return torque_to_position_target(tau_des_, s.q, s.qd, model_);
}

}  // namespace gaitlab
