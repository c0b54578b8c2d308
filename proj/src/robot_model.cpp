#include "gaitlab/robot_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace gaitlab {

namespace {

struct Sagittal {
  double a;  // foot x in the abducted frame
  double b;  // foot z in the abducted frame
};

Sagittal sagittal(double q1, double q2, double l2, double l3) {
  return {-l2 * std::sin(q1) - l3 * std::sin(q1 + q2), -l2 * std::cos(q1) - l3 * std::cos(q1 + q2)};
}

}  // namespace

Vec3 RobotModel::nominal_foot_base(int leg) const {
  return hip_offsets[static_cast<size_t>(leg)] + Vec3(0.0, side(leg) * hip_length, -nominal_height);
}

FootArray RobotModel::nominal_feet_base() const {
  FootArray feet;
  for (int i = 0; i < kNumLegs; ++i) feet[static_cast<size_t>(i)] = nominal_foot_base(i);
  return feet;
}

Vec12 RobotModel::nominal_joint_positions() const {
  Vec12 q;
  for (int i = 0; i < kNumLegs; ++i) {
    const Vec3 foot_hip = nominal_foot_base(i) - hip_offsets[static_cast<size_t>(i)];
    q.segment<3>(3 * i) = leg_ik(foot_hip, *this, i).q;
  }
  return q;
}

SchedulerConfig RobotModel::scheduler_config() const {
  SchedulerConfig cfg;
  cfg.hip_height = hip_height;
  cfg.nominal_height = nominal_height;
  cfg.nominal_feet = nominal_feet_base();
  return cfg;
}

void validate(const RobotModel& model) {
  if (!(model.base_mass > 0.0)) throw InvalidModel("robot model: base mass must be positive");
  if (!(model.torque_limit.array() > 0.0).all()) throw InvalidModel("robot model: torque limits must be positive");
  if (model.kp < 0.0 || model.kd < 0.0) throw InvalidModel("robot model: PD gains must be non-negative");
  if (!(model.leg_inertia > 0.0)) throw InvalidModel("robot model: leg inertia must be positive");
  if (!(model.thigh_length > 0.0 && model.calf_length > 0.0)) throw InvalidModel("robot model: link lengths must be positive");
}

RobotModel robot_model_from_json(const nlohmann::json& doc, RobotModel base) {
  RobotModel m = base;
  m.base_mass = doc.value("base_mass", m.base_mass);
  if (doc.contains("base_inertia")) {
    const auto d = doc.at("base_inertia").get<std::vector<double>>();
    if (d.size() != 3) throw InvalidInput("robot config: base_inertia takes the 3 diagonal entries");
    m.base_inertia = Vec3(d[0], d[1], d[2]).asDiagonal();
  }
  if (doc.contains("hip_offsets")) {
    const auto rows = doc.at("hip_offsets").get<std::vector<std::vector<double>>>();
    if (rows.size() != kNumLegs) throw InvalidInput("robot config: hip_offsets needs 4 rows");
    for (size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != 3) throw InvalidInput("robot config: hip_offsets rows need 3 values");
      m.hip_offsets[i] = Vec3(rows[i][0], rows[i][1], rows[i][2]);
    }
  }
  m.hip_length = doc.value("hip_length", m.hip_length);
  m.thigh_length = doc.value("thigh_length", m.thigh_length);
  m.calf_length = doc.value("calf_length", m.calf_length);
  if (doc.contains("torque_limit")) {
    const auto& tl = doc.at("torque_limit");
    if (tl.is_number()) {
      m.torque_limit.setConstant(tl.get<double>());
    } else {
      const auto v = tl.get<std::vector<double>>();
      if (v.size() != kNumJoints) throw InvalidInput("robot config: torque_limit needs 12 values");
      for (int i = 0; i < kNumJoints; ++i) m.torque_limit[i] = v[static_cast<size_t>(i)];
    }
  }
  m.nominal_height = doc.value("nominal_height", m.nominal_height);
  m.hip_height = doc.value("hip_height", m.hip_height);
  m.kp = doc.value("kp", m.kp);
  m.kd = doc.value("kd", m.kd);
  m.leg_inertia = doc.value("leg_inertia", m.leg_inertia);
  validate(m);
  return m;
}

Vec3 leg_fk(const Vec3& q, const RobotModel& model, int leg) {
  const double l1 = RobotModel::side(leg) * model.hip_length;
  const Sagittal s = sagittal(q[1], q[2], model.thigh_length, model.calf_length);
  const double c0 = std::cos(q[0]);
  const double s0 = std::sin(q[0]);
  return {s.a, l1 * c0 - s.b * s0, l1 * s0 + s.b * c0};
}

Mat3 leg_jacobian(const Vec3& q, const RobotModel& model, int leg) {
  const double l1 = RobotModel::side(leg) * model.hip_length;
  const double l3 = model.calf_length;
  const Sagittal s = sagittal(q[1], q[2], model.thigh_length, l3);
  const double c0 = std::cos(q[0]);
  const double s0 = std::sin(q[0]);
  const double c12 = std::cos(q[1] + q[2]);
  const double s12 = std::sin(q[1] + q[2]);
  Mat3 j;
  j.col(0) << 0.0, -l1 * s0 - s.b * c0, l1 * c0 - s.b * s0;
  j.col(1) << s.b, s.a * s0, -s.a * c0;
  j.col(2) << -l3 * c12, -s0 * l3 * s12, c0 * l3 * s12;
  return j;
}

LegIkResult leg_ik(const Vec3& foot_hip, const RobotModel& model, int leg) {
  LegIkResult out;
  const double l1 = RobotModel::side(leg) * model.hip_length;
  const double l2 = model.thigh_length;
  const double l3 = model.calf_length;

  double py = foot_hip.y();
  double pz = foot_hip.z();
  double r_yz = std::hypot(py, pz);
  const double r_min = std::abs(l1) + 1e-9;
  if (r_yz < r_min) {
    out.reachable = false;
    if (r_yz < 1e-12) {
      py = 0.0;
      pz = -r_min;
    } else {
      py *= r_min / r_yz;
      pz *= r_min / r_yz;
    }
    r_yz = r_min;
  }
  const double zp = -std::sqrt(std::max(r_yz * r_yz - l1 * l1, 0.0));
  out.q[0] = std::atan2(pz, py) - std::atan2(zp, l1);
  // Keep the abduction angle in (-pi, pi].
  out.q[0] = std::remainder(out.q[0], 2.0 * std::numbers::pi);

  double px = foot_hip.x();
  double zs = zp;
  double dist = std::hypot(px, zs);
  const double d_max = l2 + l3;
  const double d_min = std::abs(l2 - l3) + 1e-6;
  if (dist > d_max || dist < d_min) {
    out.reachable = false;
    const double target = std::clamp(dist, d_min, d_max);
    if (dist < 1e-12) {
      px = 0.0;
      zs = -target;
    } else {
      px *= target / dist;
      zs *= target / dist;
    }
    dist = target;
  }
  const double cos_knee = std::clamp((dist * dist - l2 * l2 - l3 * l3) / (2.0 * l2 * l3), -1.0, 1.0);
  out.q[2] = -std::acos(cos_knee);
  out.q[1] = std::atan2(-px, -zs) - std::atan2(l3 * std::sin(out.q[2]), l2 + l3 * std::cos(out.q[2]));
  return out;
}

}  // namespace gaitlab
