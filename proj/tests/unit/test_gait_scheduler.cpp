#include <doctest.h>

#include <cmath>

#include "generators.hpp"
#include "gaitlab/gait_scheduler.hpp"

using namespace gaitlab;
using gaitlab::testing::Gen;
using gaitlab::testing::for_all;

namespace {

double direct_phase(double t, double t0, double period, double offset) {
  const double x = (t - t0) / period + offset;
  return x - std::floor(x);
}

BodyState body_at_nominal(const SchedulerConfig& cfg) {
  BodyState b;
  b.position = Vec3(0, 0, cfg.nominal_height);
  for (int i = 0; i < kNumLegs; ++i) {
    b.feet[static_cast<size_t>(i)] = b.position + cfg.nominal_feet[static_cast<size_t>(i)];
  }
  return b;
}

}  // namespace

TEST_SUITE("scheduler") {

TEST_CASE("trot phases at t = 0.1") {
  const GaitTable table = GaitTable::defaults();
  const SchedulerState s = update_phases(make_scheduler_state(table, GaitId::Trot, 0.0), 0.1);
  const std::array<double, 4> expected{0.25, 0.75, 0.75, 0.25};
  for (int i = 0; i < 4; ++i) CHECK(s.phases[static_cast<size_t>(i)] == doctest::Approx(expected[static_cast<size_t>(i)]).epsilon(1e-12));
}

TEST_CASE("phases equal offsets at the start time") {
  const GaitTable table = GaitTable::defaults();
  for (int g = 1; g < kNumGaits; ++g) {
    const GaitId id = gait_from_index(g);
    const SchedulerState s = make_scheduler_state(table, id, 3.7);
    for (size_t i = 0; i < 4; ++i) CHECK(s.phases[i] == doctest::Approx(table[id].phase_offsets[i]));
  }
}

TEST_CASE("pronk legs share one phase") {
  const GaitTable table = GaitTable::defaults();
  for_all(50, 1, [&](Gen& g) {
    const SchedulerState s = update_phases(make_scheduler_state(table, GaitId::Pronk, 0.0), g.uniform(0, 10));
    CHECK(s.phases[0] == s.phases[1]);
    CHECK(s.phases[0] == s.phases[2]);
    CHECK(s.phases[0] == s.phases[3]);
  });
}

TEST_CASE("phase property: matches direct evaluation for random gaits and times") {
  for_all(300, 2, [](Gen& g) {
    GaitTable table = GaitTable::defaults();
    table.set(GaitId::Trot, g.gait_params());
    const double t0 = g.uniform(-5, 5);
    const double t = t0 + g.uniform(0, 20);
    const SchedulerState s = update_phases(make_scheduler_state(table, GaitId::Trot, t0), t);
    const GaitParams& p = table[GaitId::Trot];
    for (size_t i = 0; i < 4; ++i) {
      const double phi = direct_phase(t, t0, p.period, p.phase_offsets[i]);
      // Allow the wrap point to land on either side.
      const double d = std::abs(s.phases[i] - phi);
      CHECK(std::min(d, 1.0 - d) < 1e-9);
      CHECK(s.phases[i] >= 0.0);
      CHECK(s.phases[i] < 1.0);
    }
  });
}

TEST_CASE("contact reference rule") {
  const GaitTable table = GaitTable::defaults();
  CHECK(contact_reference({0.25, 0.75, 0.75, 0.25}, table[GaitId::Trot]) == ContactSet{true, false, false, true});
  for (int g = 0; g < kNumGaits; ++g) {
    CHECK(contact_reference({0, 0, 0, 0}, table[gait_from_index(g)]) == ContactSet{true, true, true, true});
  }
  CHECK(contact_reference({0.6, 0.6, 0.6, 0.6}, table[GaitId::Hop]) == ContactSet{false, false, false, false});
  CHECK(contact_reference({0.9, 0.3, 0.99, 0.5}, table[GaitId::Stand]) == ContactSet{true, true, true, true});
}

TEST_CASE("froude number and transition cycles") {
  CHECK(froude_number(0.0, 0.25) == 0.0);
  CHECK(froude_number(1.0, 0.25) == doctest::Approx(1.0 / (9.81 * 0.25)).epsilon(1e-12));
  CHECK(froude_number(1.0, 0.25) == doctest::Approx(0.4077).epsilon(1e-3));
  CHECK(froude_number(2.215, 0.25) == doctest::Approx(2.0).epsilon(1e-3));
  CHECK(transition_cycles(0.0) == 1.0);
  CHECK(transition_cycles(2.0) == doctest::Approx(std::exp(-4.0)).epsilon(1e-14));
  CHECK(transition_cycles(1.0) == doctest::Approx(0.13534).epsilon(1e-4));
  CHECK_THROWS_AS(froude_number(1.0, 0.0), InvalidModel);
}

TEST_CASE("stability indicator and resolution") {
  const GaitTable table = GaitTable::defaults();
  CHECK(*omega_stab(table[GaitId::Trot], 0.25) == doctest::Approx(9.81 / (0.25 * 6.25)).epsilon(1e-12));
  CHECK(*omega_stab(table[GaitId::Run], 0.25) == doctest::Approx(9.81 * 0.09 / 0.25).epsilon(1e-12));
  CHECK_FALSE(omega_stab(table[GaitId::Stand], 0.25).has_value());
  GaitParams fast = table[GaitId::Trot];
  fast.period /= 2.0;
  CHECK(*omega_stab(fast, 0.25) == doctest::Approx(*omega_stab(table[GaitId::Trot], 0.25) / 4.0));

  CHECK(transition_resolution(table[GaitId::Trot], table[GaitId::Trot], 0.25) == 2.0);
  CHECK(transition_resolution(table[GaitId::Trot], table[GaitId::Run], 0.25) == doctest::Approx(25.0 / 9.0).epsilon(1e-12));
  CHECK(transition_resolution(table[GaitId::Run], table[GaitId::Trot], 0.25) == doctest::Approx(1.5625).epsilon(1e-12));
  CHECK(transition_resolution(table[GaitId::Stand], table[GaitId::Run], 0.25) == 2.0);
}

TEST_CASE("begin_transition") {
  const GaitTable table = GaitTable::defaults();
  const SchedulerState trot = make_scheduler_state(table, GaitId::Trot, 0.0);

  const SchedulerState same = begin_transition(trot, table, GaitId::Trot, 1.0, 0.25);
  CHECK_FALSE(same.transitioning);
  CHECK(same.active_id == GaitId::Trot);

  const SchedulerState s = begin_transition(trot, table, GaitId::Run, 2.0, 0.25);
  CHECK(s.transitioning);
  CHECK(*s.target_id == GaitId::Run);
  CHECK(s.cycles == doctest::Approx(0.01832).epsilon(1e-3));
  CHECK(s.resolution == doctest::Approx(2.7778).epsilon(1e-4));

  const SchedulerState st = begin_transition(make_scheduler_state(table, GaitId::Stand, 0.0), table, GaitId::Trot, 0.0, 0.25);
  CHECK(st.transitioning);
  CHECK(st.cycles == 1.0);
  CHECK_THROWS_AS(begin_transition(trot, table, static_cast<GaitId>(9), 0.0, 0.25), InvalidInput);
}

TEST_CASE("step_transition advances progress and blends") {
  const GaitTable table = GaitTable::defaults();
  SchedulerState s = begin_transition(make_scheduler_state(table, GaitId::Trot, 0.0), table, GaitId::Run, 0.0, 0.25);
  const double dt = 0.1 * s.cycles * 0.4 / s.resolution;
  const SchedulerState a = step_transition(s, dt);
  CHECK(a.progress == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(a.effective.period == doctest::Approx(0.39).epsilon(1e-12));
  CHECK(a.transitioning);

  const SchedulerState z = step_transition(s, 0.0);
  CHECK(z.progress == s.progress);
  CHECK(z.effective.period == s.effective.period);

  SchedulerState fast = begin_transition(make_scheduler_state(table, GaitId::Trot, 0.0), table, GaitId::Run, 2.0, 0.25);
  fast = step_transition(fast, 0.01);
  CHECK_FALSE(fast.transitioning);
  CHECK(fast.active_id == GaitId::Run);
  CHECK_THROWS_AS(step_transition(fast, 0.01), ContractViolation);
  CHECK_THROWS_AS(step_transition(s, -0.1), InvalidInput);
}

TEST_CASE("blend property: endpoints and wrap-around") {
  for_all(200, 3, [](Gen& g) {
    const GaitParams a = g.gait_params(), b = g.gait_params();
    const GaitParams e0 = blend(a, b, 0.0), e1 = blend(a, b, 1.0);
    CHECK(e0.period == doctest::Approx(a.period));
    CHECK(e1.period == doctest::Approx(b.period));
    CHECK(e1.duty_factor == doctest::Approx(b.duty_factor));
    for (size_t i = 0; i < 4; ++i) {
      const double d = std::abs(e1.phase_offsets[i] - b.phase_offsets[i]);
      CHECK(std::min(d, 1.0 - d) < 1e-9);
      const GaitParams m = blend(a, b, g.uniform(0, 1));
      CHECK(m.phase_offsets[i] >= 0.0);
      CHECK(m.phase_offsets[i] < 1.0);
    }
  });
}

TEST_CASE("raibert footholds") {
  const GaitTable table = GaitTable::defaults();
  SchedulerConfig cfg;
  BodyState body = body_at_nominal(cfg);
  const ContactSet swing{false, false, false, false};

  Footholds f = raibert_footholds(body, Vec3::Zero(), table[GaitId::Trot], swing, cfg);
  for (int i = 0; i < 4; ++i) {
    CHECK(f.x[i] == doctest::Approx(cfg.nominal_feet[static_cast<size_t>(i)].x()));
    CHECK(f.y[i] == doctest::Approx(cfg.nominal_feet[static_cast<size_t>(i)].y()));
  }

  body.linear_velocity = Vec3(1, 0, 0);
  f = raibert_footholds(body, Vec3(1, 0, 0), table[GaitId::Trot], swing, cfg);
  for (int i = 0; i < 4; ++i) CHECK(f.x[i] - cfg.nominal_feet[static_cast<size_t>(i)].x() == doctest::Approx(0.1).epsilon(1e-12));

  body.linear_velocity = Vec3(10, 0, 0);
  f = raibert_footholds(body, Vec3(10, 0, 0), table[GaitId::Trot], swing, cfg);
  for (int i = 0; i < 4; ++i) CHECK(f.x[i] - cfg.nominal_feet[static_cast<size_t>(i)].x() == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("raibert property: offsets stay inside the clamp box under any heading") {
  const GaitTable table = GaitTable::defaults();
  SchedulerConfig cfg;
  for_all(200, 4, [&](Gen& g) {
    BodyState body = body_at_nominal(cfg);
    const double yaw = g.uniform(-3.14, 3.14);
    body.rotation = yaw_rotation(yaw);
    body.linear_velocity = g.vec3(5.0);
    body.angular_velocity = Vec3(0, 0, g.normal(0, 2));
    const Footholds f = raibert_footholds(body, g.vec3(3.0), table[g.moving_gait()], {false, false, false, false}, cfg);
    const Mat3 ry = yaw_rotation(yaw);
    for (int i = 0; i < 4; ++i) {
      const Vec3 nom = body.position + ry * Vec3(cfg.nominal_feet[static_cast<size_t>(i)].x(), cfg.nominal_feet[static_cast<size_t>(i)].y(), 0);
      const Vec3 off = ry.transpose() * Vec3(f.x[i] - nom.x(), f.y[i] - nom.y(), 0);
      CHECK(std::abs(off.x()) <= cfg.clamp_box.x() + 1e-9);
      CHECK(std::abs(off.y()) <= cfg.clamp_box.y() + 1e-9);
    }
  });
}

TEST_CASE("swing height reference") {
  const GaitParams trot = GaitTable::defaults()[GaitId::Trot];
  CHECK(swing_height_reference(0.5, trot, 0.28, 0.0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(swing_height_reference(0.75, trot, 0.28, 0.0) == doctest::Approx(0.07).epsilon(1e-12));
  CHECK(swing_height_reference(0.75, trot, 0.28, 0.2) == doctest::Approx(0.27).epsilon(1e-12));
  CHECK(swing_height_reference(1.0 - 1e-9, trot, 0.28, 0.0) == doctest::Approx(0.0));
  CHECK_THROWS_AS(swing_height_reference(0.2, trot, 0.28, 0.0), ContractViolation);
}

TEST_CASE("beta references") {
  const GaitTable table = GaitTable::defaults();
  SchedulerConfig cfg;
  const BodyState body = body_at_nominal(cfg);

  const SchedulerState stand = make_scheduler_state(table, GaitId::Stand, 0.0);
  auto [bl, bg] = compute_beta(stand, table, body, {}, cfg);
  CHECK(bl.contact_ref == ContactSet{true, true, true, true});
  for (int i = 0; i < 4; ++i) {
    CHECK(bl.px[i] == doctest::Approx(body.feet[static_cast<size_t>(i)].x()));
    CHECK(bl.py[i] == doctest::Approx(body.feet[static_cast<size_t>(i)].y()));
  }
  CHECK_FALSE(bg.kappa);

  const SchedulerState trot = update_phases(make_scheduler_state(table, GaitId::Trot, 0.0), 0.3);
  auto [tl, tg] = compute_beta(trot, table, body, {Vec3(0.5, 0, 0), GaitId::Trot}, cfg);
  CHECK(tl.flatten().size() == 16);
  CHECK(tg.flatten().size() == 10);
  CHECK(tg.omega_stab == doctest::Approx(*omega_stab(table[GaitId::Trot], cfg.hip_height)));

  const SchedulerState tr = begin_transition(trot, table, GaitId::Run, 0.0, 0.25);
  CHECK(compute_beta(tr, table, body, {Vec3(0.5, 0, 0), GaitId::Run}, cfg).second.kappa);
  CHECK(compute_beta(tr, table, body, {Vec3(0.5, 0, 0), GaitId::Run}, cfg).second.flatten()[9] == 1.0);
}

TEST_CASE("gait table names, validation and overrides") {
  CHECK(gait_from_name("Unnatural") == GaitId::Limp);
  CHECK(gait_from_name("TROT") == GaitId::Trot);
  CHECK_THROWS_AS(gait_from_name("gallop"), InvalidInput);
  CHECK_THROWS_AS(gait_from_index(8), InvalidInput);
  for (int g = 0; g < kNumGaits; ++g) CHECK(gait_from_name(gait_name(gait_from_index(g))) == gait_from_index(g));

  GaitParams bad;
  bad.period = 0.0;
  CHECK_THROWS_AS(validate(bad), InvalidModel);
  bad.period = 0.4;
  bad.duty_factor = 1.2;
  CHECK_THROWS_AS(validate(bad), InvalidModel);

  const nlohmann::json doc = {{"gaits", {{{"name", "trot"}, {"period", 0.5}, {"duty_factor", 0.6}, {"phase_offsets", {0, 0.5, 0.5, 0}}}}}};
  const GaitTable t = GaitTable::from_json(doc);
  CHECK(t[GaitId::Trot].period == 0.5);
  CHECK(t[GaitId::Run].period == 0.3);
}

TEST_CASE("stateful scheduler completes a commanded transition") {
  SchedulerConfig cfg;
  const BodyState body = body_at_nominal(cfg);
  GaitScheduler sched(GaitTable::defaults(), cfg, GaitId::Trot, 0.0, body);
  const Command cmd{Vec3(0.5, 0, 0), GaitId::Run};
  bool saw_kappa = false;
  for (int k = 1; k <= 3000 && sched.state().active_id != GaitId::Run; ++k) {
    const bool kappa = sched.step(k * 0.001, body, cmd).second.kappa;
    saw_kappa = saw_kappa || kappa;
  }
  CHECK(saw_kappa);
  CHECK(sched.state().active_id == GaitId::Run);
  CHECK_FALSE(sched.state().transitioning);
}

}
