#include <doctest.h>

#include <sstream>

#include "gaitlab/gait_selector.hpp"

using namespace gaitlab;

namespace {

LocomotionStack standing_stack(const StackConfig& cfg = {}) {
  LocomotionStack st(cfg, std::make_shared<Terrain>(flat_terrain()), std::make_unique<ScriptedController>(cfg.model),
                     GaitId::Stand, 1);
  for (int i = 0; i < 20; ++i) st.selection_step();
  return st;
}

}  // namespace

TEST_SUITE("selector") {

TEST_CASE("gait head output mapping") {
  CHECK(gait_from_action(1.4) == GaitId::Trot);
  CHECK(gait_from_action(1.5) == GaitId::Run);
  CHECK(gait_from_action(-0.2) == GaitId::Stand);
  CHECK(gait_from_action(7.6) == GaitId::Hop);
  CHECK(gait_from_action(100.0) == GaitId::Hop);
  CHECK_THROWS_AS(gait_from_action(std::nan("")), InvalidInput);
}

TEST_CASE("config validation") {
  const GaitTable t = GaitTable::defaults();
  SelectorConfig c;
  CHECK_NOTHROW(validate(c, t));
  c.horizon = 0.4;
  CHECK_THROWS_AS(validate(c, t), InvalidInput);
  c.horizon = 1.0;
  c.candidates.clear();
  CHECK_THROWS_AS(validate(c, t), InvalidInput);
}

TEST_CASE("zero command selects stand") {
  const LocomotionStack st = standing_stack();
  const OracleDecision d = oracle_select(st, {Vec3::Zero(), GaitId::Trot}, GaitId::Trot);
  CHECK(d.gait == GaitId::Stand);
  CHECK_FALSE(d.emergency);
}

TEST_CASE("trot is cheaper than run at 0.4 m/s") {
  StackConfig cfg;
  LocomotionStack st = standing_stack(cfg);
  st.set_command({Vec3(0.4, 0, 0), GaitId::Trot});
  for (int i = 0; i < 150; ++i) st.selection_step();
  const Command cmd{Vec3(0.4, 0, 0), GaitId::Trot};
  const CandidateResult trot = evaluate_candidate(st, cmd, GaitId::Trot, GaitId::Trot, {});
  const CandidateResult run = evaluate_candidate(st, cmd, GaitId::Run, GaitId::Trot, {});
  CHECK_FALSE(trot.failed);
  CHECK(trot.cost < run.cost);
  CHECK(*trot.cot < *run.cot);
}

TEST_CASE("identical gaits resolve to the incumbent") {
  StackConfig cfg;
  cfg.gaits.set(GaitId::Run, cfg.gaits[GaitId::Trot]);
  LocomotionStack st = standing_stack(cfg);
  SelectorConfig sc;
  sc.candidates = {GaitId::Trot, GaitId::Run};
  const Command cmd{Vec3(0.3, 0, 0), GaitId::Trot};
  const OracleDecision a = oracle_select(st, cmd, GaitId::Run, sc);
  CHECK(a.candidates[2].cost <= a.candidates[1].cost);
  CHECK(a.candidates[2].cost == doctest::Approx(a.candidates[1].cost).epsilon(1e-3));
  CHECK(a.gait == GaitId::Run);
  CHECK(oracle_select(st, cmd, GaitId::Trot, sc).gait == GaitId::Trot);
}

TEST_CASE("all candidates failing forces an emergency stand") {
  StackConfig cfg;
  LocomotionStack st = standing_stack(cfg);
  st.sim().mutable_state().rotation = exp_so3(Vec3(2.0, 0, 0));
  SelectorConfig sc;
  sc.candidates = {GaitId::Trot, GaitId::Run};
  const OracleDecision d = oracle_select(st, {Vec3(0.5, 0, 0), GaitId::Trot}, GaitId::Trot, sc);
  CHECK(d.emergency);
  CHECK(d.gait == GaitId::Stand);
  CHECK(d.candidates[1].failed);
  CHECK(d.candidates[1].cost > 5.0);
}

TEST_CASE("rollouts leave the live stack untouched") {
  const LocomotionStack st = standing_stack();
  const Vec3 before = st.sim().state().position;
  const double t = st.time();
  oracle_select(st, {Vec3(0.5, 0, 0), GaitId::Stand}, GaitId::Stand);
  CHECK(st.sim().state().position == before);
  CHECK(st.time() == t);
}

TEST_CASE("closed-loop selector replans every 100 ms") {
  LocomotionStack st = standing_stack();
  SelectorConfig sc;
  sc.candidates = {GaitId::Stand, GaitId::Trot};
  OracleSelector sel(sc);
  for (int k = 0; k < 35; ++k) {
    const GaitId g = sel.update(st, Vec3(0.3, 0, 0));
    st.set_command({Vec3(0.3, 0, 0), g});
    st.selection_step();
  }
  REQUIRE(sel.trace().size() == 4);
  CHECK(sel.trace()[1].time - sel.trace()[0].time == doctest::Approx(0.1));
  CHECK(sel.current() == GaitId::Trot);

  std::ostringstream out;
  write_selection_trace_header(out);
  write_selection_trace_row(out, sel.trace()[0]);
  CHECK(out.str().rfind("time,cost_stand,cost_trot,cost_run,", 0) == 0);
}

}
