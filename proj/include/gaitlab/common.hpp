#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace gaitlab {

inline constexpr double kGravity = 9.81;
inline constexpr int kNumLegs = 4;
inline constexpr int kNumJoints = 12;

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Vec12 = Eigen::Matrix<double, kNumJoints, 1>;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

/// Leg order used everywhere: front-left, front-right, rear-left, rear-right.
enum class Leg : int { FL = 0, FR = 1, RL = 2, RR = 3 };

using ContactSet = std::array<bool, kNumLegs>;
using FootArray = std::array<Vec3, kNumLegs>;

/// Rejected caller input (non-finite time, unknown gait id, ...).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Physically meaningless model parameters (h <= 0, ...).
class InvalidModel : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Caller broke a documented precondition.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Simulation state became non-finite; used as an episode termination signal.
class SimulationDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite activations or losses during learning.
class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

/// Rotation matrix of a rotation vector (axis * angle).
inline Mat3 exp_so3(const Vec3& w) {
  const double theta = w.norm();
  if (theta < 1e-12) return Mat3::Identity() + skew(w);
  return Eigen::AngleAxisd(theta, w / theta).toRotationMatrix();
}

inline double yaw_of(const Mat3& r) { return std::atan2(r(1, 0), r(0, 0)); }

inline Mat3 yaw_rotation(double yaw) {
  return Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix();
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

}  // namespace gaitlab
