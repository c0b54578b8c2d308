#include <doctest.h>

#include <cmath>
#include <memory>
#include <sstream>

#include "generators.hpp"
#include "gaitlab/quad_sim.hpp"
#include "gaitlab/robot_model.hpp"
#include "gaitlab/terrain.hpp"

using namespace gaitlab;
using gaitlab::testing::Gen;
using gaitlab::testing::for_all;

TEST_SUITE("robot_sim") {

TEST_CASE("pd torques") {
  RobotModel m;
  const Vec12 q = Vec12::Constant(0.3);
  CHECK(pd_torques(q, q, Vec12::Zero(), m).isZero());
  const Vec12 tau = pd_torques(q + Vec12::Constant(0.1), q, Vec12::Zero(), m);
  for (int i = 0; i < 12; ++i) CHECK(tau[i] == doctest::Approx(2.5).epsilon(1e-12));
  const Vec12 sat = pd_torques(q + Vec12::Constant(10.0), q, Vec12::Zero(), m);
  CHECK(sat.isApprox(m.torque_limit));
  const Vec12 damp = pd_torques(q, q, Vec12::Constant(2.0), m);
  for (int i = 0; i < 12; ++i) CHECK(damp[i] == doctest::Approx(-2.0));
}

TEST_CASE("forward kinematics geometry") {
  RobotModel m;
  for (int leg = 0; leg < 4; ++leg) {
    const Vec3 p0 = leg_fk(Vec3::Zero(), m, leg);
    CHECK(p0.x() == doctest::Approx(0.0));
    CHECK(p0.y() == doctest::Approx(RobotModel::side(leg) * m.hip_length));
    CHECK(p0.z() == doctest::Approx(-(m.thigh_length + m.calf_length)));
    const Vec3 p = leg_fk(Vec3(0, 0, M_PI / 2), m, leg);
    CHECK(std::hypot(p.x(), p.z()) == doctest::Approx(std::sqrt(0.08)).epsilon(1e-12));
  }
}

TEST_CASE("inverse kinematics") {
  RobotModel m;
  for (int leg = 0; leg < 4; ++leg) {
    const Vec3 nominal = m.nominal_foot_base(leg) - m.hip_offsets[static_cast<size_t>(leg)];
    const LegIkResult r = leg_ik(nominal, m, leg);
    CHECK(r.reachable);
    CHECK((r.q - leg_joints(m.nominal_joint_positions(), leg)).norm() < 1e-9);
    const Vec3 full(0.0, RobotModel::side(leg) * m.hip_length, -(m.thigh_length + m.calf_length));
    CHECK(std::abs(leg_ik(full, m, leg).q[2]) < 1e-6);
  }
  const LegIkResult far = leg_ik(Vec3(0, 0, -2.0), m, 0);
  CHECK_FALSE(far.reachable);
}

TEST_CASE("ik round trip property and jacobian finite differences") {
  RobotModel m;
  for_all(500, 11, [&](Gen& g) {
    const int leg = g.integer(0, 3);
    const Vec3 q(g.uniform(-0.5, 0.5), g.uniform(-1.0, 1.0), g.uniform(-2.5, -0.3));
    const Vec3 p = leg_fk(q, m, leg);
    const LegIkResult r = leg_ik(p, m, leg);
    CHECK(r.reachable);
    CHECK((leg_fk(r.q, m, leg) - p).norm() < 1e-9);

    const Mat3 j = leg_jacobian(q, m, leg);
    for (int k = 0; k < 3; ++k) {
      Vec3 dq = Vec3::Zero();
      dq[k] = 1e-6;
      const Vec3 fd = (leg_fk(q + dq, m, leg) - leg_fk(q - dq, m, leg)) / 2e-6;
      CHECK((fd - j.col(k)).norm() < 1e-7);
    }
  });
}

TEST_CASE("contact forces") {
  RobotModel m;
  const Terrain flat = flat_terrain(0.6);
  SimState s = standing_state(m, flat);
  s.position.z() += 0.05;
  update_foot_kinematics(s, m);
  const ContactForces none = contact_forces(s, flat, {});
  CHECK(none.normal.isZero());

  for_all(300, 12, [&](Gen& g) {
    SimState x = standing_state(m, flat);
    x.position.z() -= g.uniform(0.0, 0.02);
    update_foot_kinematics(x, m);
    for (auto& v : x.foot_velocities) v = g.vec3(2.0);
    for (size_t i = 0; i < 4; ++i) {
      x.anchored[i] = g.coin();
      x.anchors[i] = x.feet[i].head<2>() + Vec2(g.normal(0, 0.05), g.normal(0, 0.05));
    }
    const ContactForces cf = contact_forces(x, flat, {});
    for (size_t i = 0; i < 4; ++i) {
      CHECK(cf.force[i].z() >= 0.0);
      CHECK(cf.force[i].head<2>().norm() <= 0.6 * cf.force[i].z() + 1e-9);
    }
  });
}

TEST_CASE("free body at rest without gravity") {
  RobotModel m;
  auto terrain = std::make_shared<Terrain>(flat_terrain());
  SimConfig cfg;
  cfg.gravity = Vec3::Zero();
  SimState s = standing_state(m, *terrain);
  s.position.z() += 1.0;
  update_foot_kinematics(s, m);
  Simulator sim(m, terrain, cfg, s);
  for (int k = 0; k < 100; ++k) sim.step_torque(Vec12::Zero());
  CHECK((sim.state().position - s.position).norm() == 0.0);
  CHECK(sim.state().q == s.q);
  CHECK(sim.time() == doctest::Approx(0.1));
}

TEST_CASE("free fall") {
  RobotModel m;
  auto terrain = std::make_shared<Terrain>(flat_terrain());
  SimState s = standing_state(m, *terrain);
  s.position.z() += 2.0;
  update_foot_kinematics(s, m);
  Simulator sim(m, terrain, {}, s);
  for (int k = 0; k < 100; ++k) sim.step_torque(Vec12::Zero());
  CHECK(sim.state().position.z() - s.position.z() == doctest::Approx(-0.5 * kGravity * 0.01).epsilon(1e-3));
}

TEST_CASE("replay is bit-exact and copies are independent") {
  RobotModel m;
  auto terrain = std::make_shared<Terrain>(generate_terrain(2, 5));
  Simulator a(m, terrain);
  const Vec12 qs = stand_targets(m);
  for (int k = 0; k < 200; ++k) a.step(qs);
  const SimState snapshot = a.state();
  Simulator b = a;
  Simulator c(m, terrain);
  for (int k = 0; k < 200; ++k) c.step(qs);
  for (int k = 0; k < 300; ++k) {
    a.step(qs + Vec12::Constant(0.01 * std::sin(k * 0.1)));
    b.step(qs + Vec12::Constant(0.01 * std::sin(k * 0.1)));
  }
  CHECK(a.state().position == b.state().position);
  CHECK(a.state().q == b.state().q);
  // c replayed the first 200 steps on its own and was untouched by the later ones.
  CHECK(c.state().position == snapshot.position);
  CHECK(c.state().q == snapshot.q);
  CHECK(b.state().position != snapshot.position);
  CHECK(c.time() == doctest::Approx(0.2));
}

TEST_CASE("non-finite torques raise divergence") {
  RobotModel m;
  auto terrain = std::make_shared<Terrain>(flat_terrain());
  Simulator sim(m, terrain);
  Vec12 bad = Vec12::Zero();
  bad[0] = std::nan("");
  CHECK_THROWS_AS(sim.step_torque(bad), SimulationDiverged);
}

TEST_CASE("robot model validation and overrides") {
  RobotModel m;
  CHECK_NOTHROW(validate(m));
  m.base_mass = 0.0;
  CHECK_THROWS_AS(validate(m), InvalidModel);
  const RobotModel o = robot_model_from_json({{"base_mass", 15.0}, {"kp", 30.0}});
  CHECK(o.base_mass == 15.0);
  CHECK(o.kp == 30.0);
  CHECK(o.kd == RobotModel{}.kd);
}

TEST_CASE("terrain levels") {
  const Terrain flat = generate_terrain(0, 3);
  for (double h : flat.heights) CHECK(h == 0.0);
  const std::array<double, 4> caps{0.0, 0.06, 0.13, 0.20};
  for (int level = 1; level <= 3; ++level) {
    const Terrain t = generate_terrain(level, 9);
    CHECK(t.peak_to_trough() == doctest::Approx(caps[static_cast<size_t>(level)]).epsilon(1e-6));
    CHECK(Terrain::level_cap(level) == caps[static_cast<size_t>(level)]);
  }
  const Terrain a = generate_terrain(3, 42), b = generate_terrain(3, 42), c = generate_terrain(3, 43);
  CHECK(a.heights == b.heights);
  CHECK(a.heights != c.heights);
  CHECK_THROWS_AS(generate_terrain(4, 1), InvalidInput);

  std::ostringstream out;
  export_terrain(a, out);
  CHECK(out.str().front() == '#');
}

TEST_CASE("terrain interpolation property: between neighbouring grid heights") {
  const Terrain t = generate_terrain(2, 1);
  for_all(500, 13, [&](Gen& g) {
    const double x = g.uniform(t.origin_x, t.origin_x + (t.nx - 1) * t.cell);
    const double y = g.uniform(t.origin_y, t.origin_y + (t.ny - 1) * t.cell);
    const int ix = static_cast<int>(std::floor((x - t.origin_x) / t.cell));
    const int iy = static_cast<int>(std::floor((y - t.origin_y) / t.cell));
    const int jx = std::min(ix + 1, t.nx - 1), jy = std::min(iy + 1, t.ny - 1);
    const double lo = std::min({t.at(ix, iy), t.at(jx, iy), t.at(ix, jy), t.at(jx, jy)});
    const double hi = std::max({t.at(ix, iy), t.at(jx, iy), t.at(ix, jy), t.at(jx, jy)});
    const double h = t.height(x, y);
    CHECK(h >= lo - 1e-12);
    CHECK(h <= hi + 1e-12);
  });
}

}
