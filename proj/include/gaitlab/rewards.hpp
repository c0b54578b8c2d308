#pragma once

#include "gaitlab/biometrics.hpp"
#include "gaitlab/common.hpp"
#include "gaitlab/gait_scheduler.hpp"

namespace gaitlab {

/// psi(x) = 1 - tanh(x^2).
double psi(double x);

struct LocomotionWeights {
  double efficiency = -1.5;
  double velocity = 15.0;
  double footholds = -10.0;
  double stability = -5.0;
};

struct RewardConfigL {
  LocomotionWeights weights;
  /// Flips the signs of the two psi terms inside r_stab (diagnostic only).
  bool stab_sign_corrected = false;
  Mat3 rotation_des = Mat3::Identity();
  double nominal_height = 0.28;
};

/// Everything r_L reads from one control step.
struct LocomotionRewardInputs {
  /// Tracked triple [v_x, v_y, omega_z] in the heading frame, and the command.
  Vec3 velocity = Vec3::Zero();
  Vec3 velocity_cmd = Vec3::Zero();
  ContactSet contact{};
  ContactSet contact_ref{};
  FootArray feet{Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
  FootArray feet_ref{Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
  FootArray foot_velocities{Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
  /// Base-frame angular velocity.
  Vec3 omega = Vec3::Zero();
  Mat3 rotation = Mat3::Identity();
  double z = 0.28;
  Vec12 q = Vec12::Zero();
  Vec12 tau = Vec12::Zero();
  Vec12 q_jerk = Vec12::Zero();
  Vec12 q_star = Vec12::Zero();
  Vec12 q_star_prev = Vec12::Zero();
};

struct RewardBreakdownL {
  double r_eta = 0.0;
  double r_v = 0.0;
  double r_f = 0.0;
  double r_stab = 0.0;
  double total = 0.0;
};

double velocity_tracking_reward(const Vec3& velocity, const Vec3& velocity_cmd);

RewardBreakdownL reward_locomotion(const LocomotionRewardInputs& in, const RewardConfigL& cfg = {});
double combine_locomotion(const RewardBreakdownL& r, const LocomotionWeights& w = {});

struct RewardBreakdownG {
  double r_v = 0.0;
  double r_stand = 0.0;
  double r_smooth = 0.0;
  double r_u = 0.0;
  double psi_cot = 0.0;
  double psi_tau = 0.0;
  double psi_c = 0.0;
  double psi_w = 0.0;
  double total = 0.0;
};

inline constexpr double kUtilityWeight = 0.4;
inline constexpr double kStandPenalty = -10.0;

/// Metric values as fed to psi; a not-applicable CoT or missing W_ext counts as 0.
struct MetricTerms {
  double cot = 0.0;
  double tau_pct = 0.0;
  double c_avg_err = 0.0;
  double w_ext = 0.0;

  static MetricTerms from(const MetricsSample& m);
  double sum() const { return cot + tau_pct + c_avg_err + w_ext; }
};

RewardBreakdownG reward_gait_selection(const MetricsSample& metrics, const Vec3& velocity_cmd, GaitId gait,
                                       GaitId gait_prev, const Vec3& velocity);
double combine_gait_selection(const RewardBreakdownG& r);

/// Negative metric portion of r_G plus the smoothness penalty 0.4 psi(sum) on a gait change.
double unified_cost(const MetricsSample& metrics, bool gait_changed);

}  // namespace gaitlab
