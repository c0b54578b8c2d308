#include "gaitlab/rewards.hpp"

#include <cmath>

namespace gaitlab {

double psi(double x) { return 1.0 - std::tanh(x * x); }

double velocity_tracking_reward(const Vec3& velocity, const Vec3& velocity_cmd) {
  return psi((velocity - velocity_cmd).squaredNorm());
}

double combine_locomotion(const RewardBreakdownL& r, const LocomotionWeights& w) {
  return w.efficiency * r.r_eta + w.velocity * r.r_v + w.footholds * r.r_f + w.stability * r.r_stab;
}

RewardBreakdownL reward_locomotion(const LocomotionRewardInputs& in, const RewardConfigL& cfg) {
  RewardBreakdownL r;
  r.r_eta = in.q_jerk.squaredNorm() + in.tau.squaredNorm() + (in.q_star - in.q_star_prev).norm();
  r.r_v = velocity_tracking_reward(in.velocity, in.velocity_cmd);

  const ContactErrorResult ce = contact_error(in.contact, in.contact_ref);
  double foot_err = 0.0;
  double slip = 0.0;
  double hip = 0.0;
  for (size_t i = 0; i < kNumLegs; ++i) {
    foot_err += (in.feet[i] - in.feet_ref[i]).squaredNorm();
    if (in.contact[i]) slip += in.foot_velocities[i].squaredNorm();
    hip += in.q[static_cast<Eigen::Index>(3 * i)] * in.q[static_cast<Eigen::Index>(3 * i)];
  }
  r.r_f = 4.0 * ce.average + foot_err;

  const Vec3 up = in.rotation.transpose() * Vec3::UnitZ();
  const Vec3 up_des = cfg.rotation_des.transpose() * Vec3::UnitZ();
  const double sign = cfg.stab_sign_corrected ? -1.0 : 1.0;
  const double dz = in.z - cfg.nominal_height;
  r.r_stab = slip + in.omega.head<2>().squaredNorm() + sign * psi((up - up_des).squaredNorm()) -
             sign * psi(dz * dz) + hip;
  r.total = combine_locomotion(r, cfg.weights);
  return r;
}

MetricTerms MetricTerms::from(const MetricsSample& m) {
  MetricTerms t;
  t.cot = m.cot.value_or(0.0);
  t.tau_pct = m.tau_pct;
  t.c_avg_err = m.c_avg_err;
  t.w_ext = m.w_ext.value_or(0.0);
  return t;
}

double combine_gait_selection(const RewardBreakdownG& r) {
  return kUtilityWeight * r.r_u + r.psi_cot + r.psi_tau + r.psi_c + r.psi_w;
}

RewardBreakdownG reward_gait_selection(const MetricsSample& metrics, const Vec3& velocity_cmd, GaitId gait,
                                       GaitId gait_prev, const Vec3& velocity) {
  RewardBreakdownG r;
  const MetricTerms m = MetricTerms::from(metrics);
  r.r_v = velocity_tracking_reward(velocity, velocity_cmd);
  const bool moving = velocity_cmd.norm() > 0.0;
  const bool stand = gait == GaitId::Stand;
  r.r_stand = ((stand && moving) || (!stand && !moving)) ? kStandPenalty : 0.0;
  r.r_smooth = gait != gait_prev ? -psi(m.sum()) : 0.0;
  r.r_u = r.r_v + r.r_stand + r.r_smooth;
  r.psi_cot = psi(m.cot);
  r.psi_tau = psi(m.tau_pct);
  r.psi_c = psi(m.c_avg_err);
  r.psi_w = psi(m.w_ext);
  r.total = combine_gait_selection(r);
  return r;
}

double unified_cost(const MetricsSample& metrics, bool gait_changed) {
  const MetricTerms m = MetricTerms::from(metrics);
  double cost = -(psi(m.cot) + psi(m.tau_pct) + psi(m.c_avg_err) + psi(m.w_ext));
  if (gait_changed) cost += kUtilityWeight * psi(m.sum());
  return cost;
}

}  // namespace gaitlab
