#include "gaitlab/sensors.hpp"

namespace gaitlab {

Eigen::Matrix<double, SensorVector::kSize, 1> SensorVector::flatten() const {
  Eigen::Matrix<double, kSize, 1> out;
  out << omega, accel, q, qd, tau, f_grf;
  return out;
}

namespace {

template <typename Derived>
void add_noise(Eigen::MatrixBase<Derived>& v, double sigma, std::normal_distribution<double>& n,
               std::mt19937_64& rng) {
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] += sigma * n(rng);
}

}  // namespace

SensorVector read_sensors(const SimState& s, const NoiseConfig& noise, std::mt19937_64& rng,
                          const Vec3& gravity) {
  SensorVector out;
  out.omega = s.angular_velocity;
  out.accel = s.rotation.transpose() * (s.linear_acceleration - gravity);
  out.q = s.q;
  out.qd = s.qd;
  out.tau = s.tau;
  out.f_grf = s.f_grf;
  if (!noise.enabled) return out;

  std::normal_distribution<double> n(0.0, 1.0);
  add_noise(out.omega, noise.omega, n, rng);
  add_noise(out.accel, noise.accel, n, rng);
  add_noise(out.q, noise.q, n, rng);
  add_noise(out.qd, noise.qd, n, rng);
  add_noise(out.tau, noise.tau, n, rng);
  add_noise(out.f_grf, noise.f_grf, n, rng);
  return out;
}

}  // namespace gaitlab
