#include "gaitlab/gait_scheduler.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numbers>

namespace gaitlab {

namespace {

constexpr std::array<std::string_view, kNumGaits> kGaitNames = {
    "stand", "trot", "run", "bound", "pronk", "limp", "amble", "hop"};

double wrap_unit(double x) {
  double w = x - std::floor(x);
  return w >= 1.0 ? 0.0 : w;
}

// Signed shortest difference b - a on the unit circle, in (-0.5, 0.5].
double wrap_diff(double a, double b) {
  double d = b - a;
  d -= std::round(d);
  if (d <= -0.5) d += 1.0;
  return d;
}

double smoothstep(double s) { return s * s * (3.0 - 2.0 * s); }

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// Period that drives progress; a stand endpoint borrows the other gait's rhythm.
double driving_period(const SchedulerState& s) {
  if (s.active.all_stance && s.transitioning) return s.target.period;
  return s.active.period;
}

}  // namespace

std::string_view gait_name(GaitId id) { return kGaitNames.at(static_cast<size_t>(gait_index(id))); }

GaitId gait_from_index(int index) {
  if (index < 0 || index >= kNumGaits) {
    throw InvalidInput("gait id out of range [0,7]: " + std::to_string(index));
  }
  return static_cast<GaitId>(index);
}

GaitId gait_from_name(std::string_view name) {
  const std::string key = lower(name);
  if (key == "unnatural") return GaitId::Limp;
  for (int i = 0; i < kNumGaits; ++i) {
    if (kGaitNames[static_cast<size_t>(i)] == key) return static_cast<GaitId>(i);
  }
  throw InvalidInput("unknown gait name: " + std::string(name));
}

void validate(const GaitParams& gait) {
  if (!(gait.period > 0.0) || !std::isfinite(gait.period)) {
    throw InvalidModel("gait period must be positive");
  }
  const bool duty_ok = gait.all_stance ? (gait.duty_factor >= 0.0 && gait.duty_factor <= 1.0)
                                       : (gait.duty_factor >= 0.0 && gait.duty_factor < 1.0);
  if (!duty_ok) throw InvalidModel("duty factor outside [0, 1)");
  for (double theta : gait.phase_offsets) {
    if (!(theta >= 0.0 && theta <= 1.0)) throw InvalidModel("phase offset outside [0, 1]");
  }
}

GaitTable GaitTable::defaults() {
  GaitTable t;
  t.gaits_[0] = GaitParams{0.5, 1.0, {0.0, 0.0, 0.0, 0.0}, true};
  t.gaits_[1] = GaitParams{0.40, 0.50, {0.00, 0.50, 0.50, 0.00}, false};
  t.gaits_[2] = GaitParams{0.30, 0.40, {0.00, 0.50, 0.50, 0.00}, false};
  t.gaits_[3] = GaitParams{0.40, 0.40, {0.00, 0.00, 0.50, 0.50}, false};
  t.gaits_[4] = GaitParams{0.50, 0.50, {0.00, 0.00, 0.00, 0.00}, false};
  t.gaits_[5] = GaitParams{0.40, 0.50, {0.05, 0.50, 0.50, 0.00}, false};
  t.gaits_[6] = GaitParams{0.50, 0.55, {0.00, 0.50, 0.25, 0.75}, false};
  t.gaits_[7] = GaitParams{0.30, 0.50, {0.00, 0.00, 0.00, 0.00}, false};
  return t;
}

void GaitTable::set(GaitId id, const GaitParams& params) {
  validate(params);
  gaits_[static_cast<size_t>(gait_index(id))] = params;
}

GaitTable GaitTable::from_json(const nlohmann::json& doc, GaitTable base) {
  const auto& list = doc.contains("gaits") ? doc.at("gaits") : doc;
  if (!list.is_array()) throw InvalidInput("gait config: expected an array of gaits");
  for (const auto& entry : list) {
    const GaitId id = gait_from_name(entry.at("name").get<std::string>());
    GaitParams p = base[id];
    p.period = entry.value("period", p.period);
    p.duty_factor = entry.value("duty_factor", p.duty_factor);
    if (entry.contains("phase_offsets")) {
      const auto offsets = entry.at("phase_offsets").get<std::vector<double>>();
      if (offsets.size() != kNumLegs) throw InvalidInput("gait config: phase_offsets needs 4 values");
      std::copy(offsets.begin(), offsets.end(), p.phase_offsets.begin());
    }
    base.set(id, p);
  }
  return base;
}

GaitTable GaitTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open gait config: " + path);
  return from_json(nlohmann::json::parse(in));
}

SchedulerState make_scheduler_state(const GaitTable& table, GaitId initial, double t0) {
  SchedulerState s;
  s.active_id = initial;
  s.active = table[initial];
  s.effective = s.active;
  s.phase_origin = t0;
  s.last_time = t0;
  return update_phases(s, t0);
}

SchedulerState update_phases(SchedulerState state, double t) {
  if (!std::isfinite(t)) throw InvalidInput("update_phases: non-finite time");
  const GaitParams& g = state.effective;
  const double period = g.period;
  if (!(period > 0.0)) throw InvalidModel("update_phases: gait period must be positive");

  const double base = (t - state.phase_origin) / period;
  const long n = static_cast<long>(std::floor(base));
  state.cycle_wrapped = n > state.base_cycles;
  if (state.cycle_wrapped) state.completed_cycles += n - state.base_cycles;
  state.base_cycles = n;

  for (int i = 0; i < kNumLegs; ++i) {
    const double x = (t - state.phase_origin) / period + g.phase_offsets[static_cast<size_t>(i)];
    const double fl = std::floor(x);
    double phi = x - fl;
    if (phi >= 1.0) phi = 0.0;
    state.phases[static_cast<size_t>(i)] = phi;
    state.period_starts[static_cast<size_t>(i)] =
        state.phase_origin + (fl - g.phase_offsets[static_cast<size_t>(i)]) * period;
  }
  state.contact_ref = contact_reference(state.phases, g);
  state.last_time = t;
  return state;
}

ContactSet contact_reference(const std::array<double, kNumLegs>& phases, const GaitParams& gait) {
  ContactSet c{};
  for (int i = 0; i < kNumLegs; ++i) {
    c[static_cast<size_t>(i)] = gait.all_stance || phases[static_cast<size_t>(i)] < gait.duty_factor;
  }
  return c;
}

double froude_number(double speed, double hip_height) {
  if (!(hip_height > 0.0)) throw InvalidModel("froude_number: hip height must be positive");
  return speed * speed / (kGravity * hip_height);
}

double transition_cycles(double froude) { return std::exp(-2.0 * froude); }

std::optional<double> omega_stab(const GaitParams& gait, double hip_height) {
  if (!(hip_height > 0.0)) throw InvalidModel("omega_stab: hip height must be positive");
  if (gait.all_stance) return std::nullopt;
  const double f = gait.frequency();
  return kGravity / (hip_height * f * f);
}

double transition_resolution(const GaitParams& current, const GaitParams& next, double hip_height) {
  const auto cur = omega_stab(current, hip_height);
  const auto nxt = omega_stab(next, hip_height);
  // Stand borrows the partner's stability indicator, giving a unit ratio.
  if (!cur || !nxt) return 2.0;
  return 1.0 + *cur / *nxt;
}

GaitParams blend(const GaitParams& from, const GaitParams& to, double eta) {
  GaitParams a = from;
  GaitParams b = to;
  if (a.all_stance && b.all_stance) return a;
  if (a.all_stance) {
    a = b;
    a.duty_factor = 1.0;
  }
  if (b.all_stance) {
    b = a;
    b.duty_factor = 1.0;
  }
  eta = std::clamp(eta, 0.0, 1.0);
  GaitParams out;
  out.all_stance = false;
  out.period = (1.0 - eta) * a.period + eta * b.period;
  out.duty_factor = (1.0 - eta) * a.duty_factor + eta * b.duty_factor;
  for (size_t i = 0; i < kNumLegs; ++i) {
    const double theta = a.phase_offsets[i] + eta * wrap_diff(a.phase_offsets[i], b.phase_offsets[i]);
    out.phase_offsets[i] = wrap_unit(theta);
  }
  return out;
}

SchedulerState begin_transition(SchedulerState state, const GaitTable& table, GaitId target,
                                double froude, double hip_height) {
  const int idx = gait_index(target);
  if (idx < 0 || idx >= kNumGaits) throw InvalidInput("begin_transition: unknown gait id");
  const GaitId goal = state.transitioning ? *state.target_id : state.active_id;
  if (target == goal) return state;

  if (state.transitioning) {
    // Redirected mid-transition: the blend in force becomes the new starting point.
    state.active = state.effective;
    if (state.progress >= 0.5) state.active_id = *state.target_id;
  }
  const bool from_stand = state.active.all_stance;

  state.target_id = target;
  state.target = table[target];
  state.cycles = transition_cycles(froude);
  state.resolution = transition_resolution(state.active, state.target, hip_height);
  state.progress = 0.0;
  state.transitioning = true;

  const double old_period = state.effective.period;
  const double base_phase = wrap_unit((state.last_time - state.phase_origin) / old_period);
  state.effective = blend(state.active, state.target, 0.0);
  if (from_stand) {
    state.phase_origin = state.last_time;
  } else {
    state.phase_origin = state.last_time - base_phase * state.effective.period;
  }
  state.base_cycles = 0;
  return state;
}

SchedulerState step_transition(SchedulerState state, double dt) {
  if (!state.transitioning) throw ContractViolation("step_transition: no transition in progress");
  if (!(dt >= 0.0) || !std::isfinite(dt)) throw InvalidInput("step_transition: invalid time step");
  if (dt == 0.0) return state;

  const double old_period = state.effective.period;
  const double base_phase = wrap_unit((state.last_time - state.phase_origin) / old_period);

  state.progress += state.resolution * dt / (state.cycles * driving_period(state));
  if (state.progress >= 1.0) {
    state.progress = 1.0;
    state.active_id = *state.target_id;
    state.active = state.target;
    state.effective = state.target;
    state.target_id.reset();
    state.transitioning = false;
  } else {
    state.effective = blend(state.active, state.target, state.progress);
  }
  state.phase_origin = state.last_time - base_phase * state.effective.period;
  state.base_cycles = 0;
  return state;
}

Footholds raibert_footholds(const BodyState& body, const Vec3& velocity_cmd, const GaitParams& gait,
                            const ContactSet& contact_ref, const SchedulerConfig& cfg) {
  const Mat3 ry = yaw_rotation(yaw_of(body.rotation));
  const Vec2 base_xy = body.position.head<2>();
  const Vec2 v_xy = body.linear_velocity.head<2>();
  const double wz = body.angular_velocity.z();
  const Vec2 v_cmd_world = (ry * Vec3(velocity_cmd.x(), velocity_cmd.y(), 0.0)).head<2>();
  const double wz_cmd = velocity_cmd.z();
  const double stance_time = gait.duty_factor * gait.period;

  Footholds out;
  for (int i = 0; i < kNumLegs; ++i) {
    const Vec3& nom_b = cfg.nominal_feet[static_cast<size_t>(i)];
    const Vec2 r = (ry * Vec3(nom_b.x(), nom_b.y(), 0.0)).head<2>();
    const Vec2 nominal = base_xy + r;
    Vec2 target;
    if (contact_ref[static_cast<size_t>(i)]) {
      target = body.feet[static_cast<size_t>(i)].head<2>();
    } else {
      const Vec2 v_hip = v_xy + wz * Vec2(-r.y(), r.x());
      const Vec2 v_hip_cmd = v_cmd_world + wz_cmd * Vec2(-r.y(), r.x());
      target = nominal + 0.5 * stance_time * v_hip + cfg.raibert_gain * (v_hip - v_hip_cmd);
    }
    Vec3 off = ry.transpose() * Vec3(target.x() - nominal.x(), target.y() - nominal.y(), 0.0);
    off.x() = std::clamp(off.x(), -cfg.clamp_box.x(), cfg.clamp_box.x());
    off.y() = std::clamp(off.y(), -cfg.clamp_box.y(), cfg.clamp_box.y());
    const Vec2 clamped = nominal + (ry * off).head<2>();
    out.x[i] = clamped.x();
    out.y[i] = clamped.y();
  }
  return out;
}

double swing_height_reference(double phase, const GaitParams& gait, double nominal_height,
                              double terrain_z, double ratio, double clamp) {
  if (gait.all_stance || phase < gait.duty_factor) {
    throw ContractViolation("swing_height_reference: leg is in stance");
  }
  const double s = std::clamp((phase - gait.duty_factor) / (1.0 - gait.duty_factor), 0.0, 1.0);
  const double lift = ratio * nominal_height * std::sin(std::numbers::pi * s);
  return terrain_z + std::clamp(lift, -clamp, clamp);
}

Eigen::Matrix<double, BetaL::kSize, 1> BetaL::flatten() const {
  Eigen::Matrix<double, kSize, 1> v;
  for (int i = 0; i < kNumLegs; ++i) v[i] = contact_ref[static_cast<size_t>(i)] ? 1.0 : 0.0;
  v.segment<4>(4) = px;
  v.segment<4>(8) = py;
  v.segment<4>(12) = pz;
  return v;
}

Eigen::Matrix<double, BetaG::kSize, 1> BetaG::flatten() const {
  Eigen::Matrix<double, kSize, 1> v;
  for (int i = 0; i < kNumLegs; ++i) v[i] = contact_ref[static_cast<size_t>(i)] ? 1.0 : 0.0;
  v.segment<4>(4) = pz;
  v[8] = omega_stab;
  v[9] = kappa ? 1.0 : 0.0;
  return v;
}

std::pair<BetaL, BetaG> compute_beta(const SchedulerState& state, const GaitTable& table,
                                     const BodyState& body, const Command& cmd,
                                     const SchedulerConfig& cfg, const HeightFn& height) {
  auto ground = [&](double x, double y) { return height ? height(x, y) : 0.0; };
  const GaitParams& g = state.effective;
  const Footholds targets = raibert_footholds(body, cmd.velocity, g, state.contact_ref, cfg);
  const Mat3 ry = yaw_rotation(yaw_of(body.rotation));

  BetaL bl;
  bl.contact_ref = state.contact_ref;
  for (int i = 0; i < kNumLegs; ++i) {
    const auto li = static_cast<size_t>(i);
    const Vec3& nom_b = cfg.nominal_feet[li];
    const Vec2 nominal = body.position.head<2>() + (ry * Vec3(nom_b.x(), nom_b.y(), 0.0)).head<2>();
    const double nominal_ground = ground(nominal.x(), nominal.y());

    Vec2 xy(targets.x[i], targets.y[i]);
    double z;
    if (state.contact_ref[li]) {
      z = ground(xy.x(), xy.y());
    } else {
      const double s = std::clamp((state.phases[li] - g.duty_factor) / (1.0 - g.duty_factor), 0.0, 1.0);
      const double e = smoothstep(s);
      const Vec2 start = state.liftoff[li];
      xy = start + e * (xy - start);
      const double base_ground = (1.0 - e) * state.liftoff_ground[li] + e * ground(targets.x[i], targets.y[i]);
      z = swing_height_reference(state.phases[li], g, cfg.nominal_height, base_ground,
                                 cfg.swing_height_ratio, cfg.clamp_box.z());
    }
    Vec3 off = ry.transpose() * Vec3(xy.x() - nominal.x(), xy.y() - nominal.y(), 0.0);
    off.x() = std::clamp(off.x(), -cfg.clamp_box.x(), cfg.clamp_box.x());
    off.y() = std::clamp(off.y(), -cfg.clamp_box.y(), cfg.clamp_box.y());
    const Vec2 clamped = nominal + (ry * off).head<2>();
    bl.px[i] = clamped.x();
    bl.py[i] = clamped.y();
    bl.pz[i] = std::clamp(z, nominal_ground - cfg.clamp_box.z(), nominal_ground + cfg.clamp_box.z());
  }

  BetaG bg;
  bg.contact_ref = bl.contact_ref;
  bg.pz = bl.pz;
  if (auto os = omega_stab(g, cfg.hip_height)) {
    bg.omega_stab = *os;
  } else {
    // Pure stand: use the table's placeholder stand period.
    const double f = table[GaitId::Stand].frequency();
    bg.omega_stab = kGravity / (cfg.hip_height * f * f);
  }
  bg.kappa = state.transitioning;
  (void)cmd;
  return {bl, bg};
}

GaitScheduler::GaitScheduler(GaitTable table, SchedulerConfig cfg, GaitId initial, double t0,
                             const BodyState& body, const HeightFn& height)
    : table_(std::move(table)), cfg_(std::move(cfg)), state_(make_scheduler_state(table_, initial, t0)) {
  for (int i = 0; i < kNumLegs; ++i) {
    const auto li = static_cast<size_t>(i);
    state_.liftoff[li] = body.feet[li].head<2>();
    state_.liftoff_ground[li] = height ? height(body.feet[li].x(), body.feet[li].y()) : 0.0;
  }
}

std::pair<BetaL, BetaG> GaitScheduler::step(double t, const BodyState& body, const Command& cmd,
                                            const HeightFn& height) {
  if (cmd.gait != goal()) {
    const double speed = cmd.velocity.head<2>().norm();
    state_ = begin_transition(state_, table_, cmd.gait, froude_number(speed, cfg_.hip_height),
                              cfg_.hip_height);
  }
  if (state_.transitioning) state_ = step_transition(state_, t - state_.last_time);
  const ContactSet before = state_.contact_ref;
  state_ = update_phases(state_, t);
  for (int i = 0; i < kNumLegs; ++i) {
    const auto li = static_cast<size_t>(i);
    if (before[li] && !state_.contact_ref[li]) {
      state_.liftoff[li] = body.feet[li].head<2>();
      state_.liftoff_ground[li] = height ? height(body.feet[li].x(), body.feet[li].y()) : 0.0;
    }
  }
  return compute_beta(state_, table_, body, cmd, cfg_, height);
}

}  // namespace gaitlab
