#include <doctest.h>

#include <cmath>
#include <memory>

#include "generators.hpp"
#include "gaitlab/quad_sim.hpp"
#include "gaitlab/sensors.hpp"
#include "gaitlab/state_estimator.hpp"

using namespace gaitlab;
using gaitlab::testing::Gen;
using gaitlab::testing::for_all;

namespace {

double sample_std(const std::vector<double>& x) {
  double m = 0.0;
  for (double v : x) m += v;
  m /= static_cast<double>(x.size());
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(x.size() - 1));
}

SimState settled_stand(double seconds) {
  RobotModel m;
  Simulator sim(m, std::make_shared<Terrain>(flat_terrain()));
  const Vec12 qs = stand_targets(m);
  for (int k = 0; k < static_cast<int>(seconds * 1000); ++k) sim.step(qs);
  return sim.state();
}

}  // namespace

TEST_SUITE("estimation") {

TEST_CASE("sensors without noise project the state exactly") {
  std::mt19937_64 rng(1);
  for_all(50, 21, [&](Gen& g) {
    SimState s;
    s.rotation = g.rotation();
    s.angular_velocity = g.vec3();
    s.q = g.vec12();
    s.qd = g.vec12();
    s.tau = g.vec12();
    s.f_grf = Vec4(g.uniform(0, 50), g.uniform(0, 50), g.uniform(0, 50), g.uniform(0, 50));
    const SensorVector z = read_sensors(s, {}, rng);
    CHECK(z.omega == s.angular_velocity);
    CHECK(z.q == s.q);
    CHECK(z.qd == s.qd);
    CHECK(z.tau == s.tau);
    CHECK(z.f_grf == s.f_grf);
    CHECK((z.accel - s.rotation.transpose() * Vec3(0, 0, kGravity)).norm() < 1e-12);
    CHECK(z.flatten().size() == 46);
  });
}

TEST_CASE("accelerometer of a static robot reads gravity in the base frame") {
  const SimState s = settled_stand(0.5);
  std::mt19937_64 rng(1);
  const SensorVector z = read_sensors(s, {}, rng);
  CHECK((z.accel - Vec3(0, 0, kGravity)).norm() < 0.05);
}

TEST_CASE("noise std per channel within 5%") {
  NoiseConfig noise;
  noise.enabled = true;
  std::mt19937_64 rng(2);
  const SimState s;
  const int n = 100000;
  std::vector<double> w(n), a(n), q(n), qd(n), tau(n), f(n);
  for (int k = 0; k < n; ++k) {
    const SensorVector z = read_sensors(s, noise, rng);
    const auto uk = static_cast<size_t>(k);
    w[uk] = z.omega.x();
    a[uk] = z.accel.y();
    q[uk] = z.q[4];
    qd[uk] = z.qd[7];
    tau[uk] = z.tau[11];
    f[uk] = z.f_grf[2];
  }
  CHECK(sample_std(w) == doctest::Approx(0.015).epsilon(0.05));
  CHECK(sample_std(a) == doctest::Approx(0.015).epsilon(0.05));
  CHECK(sample_std(q) == doctest::Approx(0.005).epsilon(0.05));
  CHECK(sample_std(qd) == doctest::Approx(0.15).epsilon(0.05));
  CHECK(sample_std(tau) == doctest::Approx(1.0).epsilon(0.05));
  CHECK(sample_std(f) == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("estimator settles on a static robot") {
  RobotModel m;
  Simulator sim(m, std::make_shared<Terrain>(flat_terrain()));
  StateEstimator se(m);
  se.reset(sim.state());
  std::mt19937_64 rng(3);
  const Vec12 qs = stand_targets(m);
  for (int k = 0; k < 1000; ++k) {
    sim.step(qs);
    se.update(read_sensors(sim.state(), {}, rng), 1e-3);
  }
  CHECK(se.output().v_b.norm() < 0.02);
  CHECK(std::abs(se.output().z - sim.state().position.z()) < 0.01);
  CHECK((se.output().gravity_axis - Vec3::UnitZ()).norm() < 1e-3);
  CHECK(se.output().flatten().size() == 50);
}

TEST_CASE("gravity axis is a fixed point under zero gyro and aligned accel") {
  RobotModel m;
  EstimatorState est;
  SensorVector z;
  z.accel = Vec3(0, 0, kGravity);
  for (int k = 0; k < 1000; ++k) est = se_step(est, z, 1e-3, m, {});
  CHECK((se_output(est, z, {}).gravity_axis - Vec3::UnitZ()).norm() < 1e-12);
}

TEST_CASE("tilt is corrected by the accelerometer") {
  RobotModel m;
  EstimatorState est;
  est.rotation = exp_so3(Vec3(0.2, 0, 0));
  SensorVector z;
  z.accel = Vec3(0, 0, kGravity);
  for (int k = 0; k < 5000; ++k) est = se_step(est, z, 1e-3, m, {});
  CHECK((se_output(est, z, {}).gravity_axis - Vec3::UnitZ()).norm() < 1e-3);
}

TEST_CASE("velocity drift grows during a prolonged flight phase") {
  RobotModel m;
  EstimatorState est;
  std::mt19937_64 rng(4);
  NoiseConfig noise;
  noise.enabled = true;
  SimState flying;
  flying.linear_acceleration = Vec3(0, 0, -kGravity);
  double drift_short = 0.0;
  for (int k = 1; k <= 3000; ++k) {
    SensorVector z = read_sensors(flying, noise, rng);
    z.accel += Vec3(0.02, 0, 0);  // small bias
    est = se_step(est, z, 1e-3, m, {});
    if (k == 500) drift_short = est.velocity.norm();
  }
  CHECK(est.velocity.norm() > drift_short);
}

TEST_CASE("invalid dt") {
  RobotModel m;
  CHECK_THROWS_AS(se_step({}, {}, 0.0, m, {}), InvalidInput);
}

}
