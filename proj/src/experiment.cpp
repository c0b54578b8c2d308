#include "gaitlab/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "gaitlab/training.hpp"

namespace gaitlab {

namespace fs = std::filesystem;

ScenarioError::ScenarioError(const std::string& what, int line, int column)
    : InvalidInput(line > 0 ? "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what
                            : what),
      line_(line),
      column_(column) {}

Command CommandScript::at(double t, double duration) const {
  constexpr double kTwoPi = 6.283185307179586;
  Command c;
  switch (kind) {
    case CommandKind::Piecewise:
      return CommandSchedule(segments).at(t);
    case CommandKind::Sinusoid: {
      c.velocity = Vec3(offset + amplitude * std::sin(kTwoPi * t / period), 0.0, wz);
      c.gait = gait;
      break;
    }
    case CommandKind::Sweep: {
      const double end = ramp_end.value_or(duration);
      const double u = end > hold ? std::clamp((t - hold) / (end - hold), 0.0, 1.0) : 1.0;
      c.velocity = Vec3(v_start + u * (v_end - v_start), 0.0, wz);
      c.gait = gait;
      break;
    }
    case CommandKind::GaitCycle:
      c.velocity = Vec3(vx, 0.0, wz);
      c.gait = gait;
      break;
  }
  if (!gaits.empty() && kind != CommandKind::Sweep) {
    const auto k = static_cast<size_t>(std::floor(t / switch_period + 1e-9));
    c.gait = gaits[k % gaits.size()];
  }
  return c;
}

namespace {

std::string resolve(const std::string& path, const std::string& base_dir) {
  if (path.empty()) return path;
  const fs::path p(path);
  return p.is_absolute() ? path : (fs::path(base_dir) / p).lexically_normal().string();
}

std::vector<GaitId> gaits_from_json(const nlohmann::json& j) {
  std::vector<GaitId> out;
  for (const auto& g : j) out.push_back(g.is_number() ? gait_from_index(g.get<int>()) : gait_from_name(g.get<std::string>()));
  return out;
}

GaitId gait_field(const nlohmann::json& j, const char* key, GaitId fallback) {
  if (!j.contains(key)) return fallback;
  const auto& g = j.at(key);
  return g.is_number() ? gait_from_index(g.get<int>()) : gait_from_name(g.get<std::string>());
}

CommandScript commands_from_json(const nlohmann::json& j) {
  CommandScript c;
  const std::string type = j.value("type", "piecewise");
  if (type == "piecewise") {
    c.kind = CommandKind::Piecewise;
    for (const auto& s : j.at("segments")) {
      CommandSegment seg;
      seg.start = s.at("t").get<double>();
      seg.t_acc = s.value("t_acc", 0.0);
      seg.velocity = Vec3(s.value("vx", 0.0), s.value("vy", 0.0), s.value("wz", 0.0));
      seg.gait = gait_field(s, "gait", GaitId::Stand);
      c.segments.push_back(seg);
    }
  } else if (type == "sinusoid") {
    c.kind = CommandKind::Sinusoid;
    c.amplitude = j.value("amplitude", c.amplitude);
    c.offset = j.value("offset", c.offset);
    c.period = j.value("period", c.period);
  } else if (type == "sweep") {
    c.kind = CommandKind::Sweep;
    c.v_start = j.value("v_start", c.v_start);
    c.v_end = j.value("v_end", c.v_end);
    c.hold = j.value("hold", c.hold);
    if (j.contains("ramp_end")) c.ramp_end = j.at("ramp_end").get<double>();
  } else if (type == "gait_cycle") {
    c.kind = CommandKind::GaitCycle;
    c.vx = j.value("vx", c.vx);
  } else {
    throw ScenarioError("unknown command type '" + type + "'");
  }
  c.wz = j.value("wz", c.wz);
  c.gait = gait_field(j, "gait", c.gait);
  if (j.contains("gaits")) c.gaits = gaits_from_json(j.at("gaits"));
  c.switch_period = j.value("switch_period", c.switch_period);
  return c;
}

// Maps a byte offset of the parser to a 1-based line and column.
std::pair<int, int> line_column(const std::string& text, std::size_t byte) {
  int line = 1, col = 1;
  const std::size_t end = std::min(byte, text.size());
  for (std::size_t i = 0; i + 1 < end; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace

Scenario scenario_from_json(const nlohmann::json& j, const std::string& base_dir) {
  Scenario s;
  try {
    s.name = j.value("name", s.name);
    s.seed = j.value("seed", s.seed);
    s.duration = j.value("duration", s.duration);
    if (j.contains("terrain")) {
      const auto& t = j.at("terrain");
      s.terrain_level = t.value("level", s.terrain_level);
      s.terrain_seed = t.value("seed", s.terrain_seed);
    }
    if (j.contains("controller")) {
      const auto& c = j.at("controller");
      const std::string type = c.value("type", "scripted");
      if (type == "scripted") {
        s.controller = ControllerKind::Scripted;
      } else if (type == "policy") {
        s.controller = ControllerKind::Policy;
        s.controller_checkpoint = resolve(c.at("checkpoint").get<std::string>(), base_dir);
      } else {
        throw ScenarioError("unknown controller type '" + type + "'");
      }
    }
    if (j.contains("selector")) {
      const auto& c = j.at("selector");
      const std::string type = c.value("type", "fixed");
      if (type == "fixed") {
        s.selector = SelectorKind::Fixed;
      } else if (type == "oracle") {
        s.selector = SelectorKind::Oracle;
        s.oracle.horizon = c.value("horizon", s.oracle.horizon);
        s.oracle.replan_period = c.value("replan_period", s.oracle.replan_period);
        s.oracle.failure_cost = c.value("failure_cost", s.oracle.failure_cost);
        if (c.contains("candidates")) s.oracle.candidates = gaits_from_json(c.at("candidates"));
      } else if (type == "policy") {
        s.selector = SelectorKind::Policy;
        s.selector_checkpoint = resolve(c.at("checkpoint").get<std::string>(), base_dir);
      } else {
        throw ScenarioError("unknown selector type '" + type + "'");
      }
    }
    if (j.contains("commands")) s.commands = commands_from_json(j.at("commands"));
    s.bin_width = j.value("bin_width", s.bin_width);
    if (j.contains("outputs")) {
      const auto& o = j.at("outputs");
      s.outputs.dir = o.value("dir", s.outputs.dir);
      s.outputs.timeseries = o.value("timeseries", s.outputs.timeseries);
      s.outputs.summary = o.value("summary", s.outputs.summary);
      s.outputs.selection = o.value("selection", s.outputs.selection);
    }
    if (j.contains("config")) {
      const auto& c = j.at("config");
      if (c.contains("robot")) s.stack.model = robot_model_from_json(c.at("robot"), s.stack.model);
      if (c.contains("sim")) s.stack.sim = sim_config_from_json(c.at("sim"), s.stack.sim);
      if (c.contains("gaits")) s.stack.gaits = GaitTable::from_json(c.at("gaits"), s.stack.gaits);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ScenarioError(std::string("scenario: ") + e.what());
  }
  validate(s);
  return s;
}

Scenario parse_scenario(const std::string& text, const std::string& base_dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte);
    throw ScenarioError(std::string("scenario parse error: ") + e.what(), line, col);
  }
  if (!j.is_object()) throw ScenarioError("scenario: top level must be an object", 1, 1);
  return scenario_from_json(j, base_dir);
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string dir = fs::path(path).parent_path().string();
  return parse_scenario(ss.str(), dir.empty() ? "." : dir);
}

void validate(const Scenario& s) {
  if (!(s.duration > 0.0)) throw ScenarioError("scenario: duration must be positive");
  if (s.terrain_level < 0 || s.terrain_level > 3) throw ScenarioError("scenario: terrain level must be in 0..3");
  if (!(s.bin_width > 0.0)) throw ScenarioError("scenario: bin_width must be positive");
  const CommandScript& c = s.commands;
  if (c.kind == CommandKind::Piecewise) {
    if (c.segments.empty()) throw ScenarioError("scenario: piecewise commands need at least one segment");
    for (size_t i = 1; i < c.segments.size(); ++i) {
      if (!(c.segments[i].start > c.segments[i - 1].start)) {
        throw ScenarioError("scenario: command timestamps must be strictly increasing");
      }
    }
  }
  if (c.kind == CommandKind::Sinusoid && !(c.period > 0.0)) throw ScenarioError("scenario: sinusoid period must be positive");
  if (!c.gaits.empty() && !(c.switch_period > 0.0)) throw ScenarioError("scenario: switch_period must be positive");
  if (c.kind == CommandKind::GaitCycle && c.gaits.empty()) throw ScenarioError("scenario: gait_cycle needs a gait list");
  if (s.controller == ControllerKind::Policy && !fs::exists(s.controller_checkpoint)) {
    throw ScenarioError("scenario: controller checkpoint not found: " + s.controller_checkpoint);
  }
  if (s.selector == SelectorKind::Policy && !fs::exists(s.selector_checkpoint)) {
    throw ScenarioError("scenario: selector checkpoint not found: " + s.selector_checkpoint);
  }
  if (s.selector == SelectorKind::Oracle) validate(s.oracle, s.stack.gaits);
}

Scenario sweep_scenario(double v_max, double duration, std::uint64_t seed) {
  Scenario s;
  s.name = "sweep";
  s.seed = seed;
  s.duration = duration;
  s.selector = SelectorKind::Oracle;
  s.commands.kind = CommandKind::Sweep;
  s.commands.v_start = 0.0;
  s.commands.v_end = v_max;
  s.commands.hold = 0.5;
  return s;
}

namespace {

struct MeanAcc {
  double sum = 0.0;
  int n = 0;
  void add(double v) {
    sum += v;
    ++n;
  }
  void add(const std::optional<double>& v) {
    if (v) add(*v);
  }
  nlohmann::json json() const { return n > 0 ? nlohmann::json(sum / n) : nlohmann::json(nullptr); }
};

struct GaitStats {
  int steps = 0;
  MeanAcc cot, tau_pct, w_ext, c_avg_err, planar_error;
};

struct Bin {
  std::array<int, kNumGaits> counts{};
  int steps = 0;
  std::array<MeanAcc, kNumGaits> cot;
};

void write_timeseries_header(std::ostream& out) {
  out << kTimeseriesSchema << '\n';
  out << "time,vx_cmd,vy_cmd,wz_cmd,gait_selected,gait_active,kappa,x,y,z,roll,pitch,yaw,vx,vy,wz";
  for (int i = 0; i < kNumLegs; ++i) out << ",contact_" << i;
  for (int i = 0; i < kNumLegs; ++i) out << ",contact_ref_" << i;
  for (const char* a : {"px", "py", "pz"}) {
    for (int i = 0; i < kNumLegs; ++i) out << ',' << a << "_ref_" << i;
  }
  out << ",omega_stab,cot,tau_pct,w_ext,c_avg_err,planar_error,r_v,r_u,r_g\n";
}

void put_opt(std::ostream& out, const std::optional<double>& v) {
  out << ',';
  if (v) out << *v;
}

Vec3 roll_pitch_yaw(const Mat3& r) {
  return {std::atan2(r(2, 1), r(2, 2)), std::asin(std::clamp(-r(2, 0), -1.0, 1.0)), yaw_of(r)};
}

std::shared_ptr<const Terrain> scenario_terrain(const Scenario& s) {
  if (s.terrain_level == 0) return std::make_shared<Terrain>(flat_terrain());
  return std::make_shared<Terrain>(generate_terrain(s.terrain_level, s.terrain_seed));
}

}  // namespace

RunResult run_scenario(const Scenario& s, std::ostream* timeseries, std::ostream* selection) {
  validate(s);
  const auto terrain = scenario_terrain(s);

  std::optional<Checkpoint> ctrl_ckpt, sel_ckpt;
  std::unique_ptr<LocomotionController> controller;
  if (s.controller == ControllerKind::Policy) {
    ctrl_ckpt = load_checkpoint(s.controller_checkpoint);
    if (ctrl_ckpt->net.obs_dim() != kObsLSize || ctrl_ckpt->net.act_dim() != kNumJoints) {
      throw ScenarioError("scenario: controller checkpoint is not a locomotion policy");
    }
    controller = std::make_unique<PolicyController>(s.stack.model);
  } else {
    controller = std::make_unique<ScriptedController>(s.stack.model);
  }
  if (s.selector == SelectorKind::Policy) {
    sel_ckpt = load_checkpoint(s.selector_checkpoint);
    if (sel_ckpt->net.obs_dim() != kObsGSize || sel_ckpt->net.act_dim() != 1) {
      throw ScenarioError("scenario: selector checkpoint is not a gait policy");
    }
  }

  const Command first = s.commands.at(0.0, s.duration);
  const GaitId initial = s.selector == SelectorKind::Fixed ? first.gait : GaitId::Stand;
  LocomotionStack stack(s.stack, terrain, std::move(controller), initial, s.seed);
  OracleSelector oracle(s.oracle, GaitId::Stand);

  if (timeseries) {
    *timeseries << std::setprecision(10);
    write_timeseries_header(*timeseries);
  }
  if (selection) {
    *selection << std::setprecision(10);
    write_selection_trace_header(*selection);
  }

  RunResult res;
  const double step_dt = s.stack.selection_decimation * s.stack.sim.dt;
  const int n_steps = static_cast<int>(std::lround(s.duration / step_dt));
  std::array<GaitStats, kNumGaits> per_gait;
  MeanAcc cot, tau_pct, w_ext, c_avg_err, planar_error, r_g;
  std::map<int, Bin> bins;
  int zero_steps = 0, zero_stand = 0, steps_done = 0;
  GaitId prev = initial;
  double gait_prev_raw = gait_index(initial);
  Vec3 cmd_prev = first.velocity;

  for (int k = 0; k < n_steps; ++k) {
    const double t = stack.time();
    const Command script = s.commands.at(t, s.duration);
    GaitId gait = script.gait;
    if (s.selector == SelectorKind::Oracle) {
      const size_t before = oracle.trace().size();
      gait = oracle.update(stack, script.velocity);
      if (oracle.trace().size() > before) {
        const SelectionTraceRow& row = oracle.trace().back();
        res.selection.push_back(row);
        if (selection) write_selection_trace_row(*selection, row);
        const int b = static_cast<int>(std::floor(script.velocity.head<2>().norm() / s.bin_width + 1e-9));
        const OracleDecision& d = oracle.decisions().back();
        for (int g = 0; g < kNumGaits; ++g) {
          const CandidateResult& c = d.candidates[static_cast<size_t>(g)];
          if (!c.failed) bins[b].cot[static_cast<size_t>(g)].add(c.cot);
        }
      }
    } else if (s.selector == SelectorKind::Policy) {
      const Vec3 accel = command_acceleration(script.velocity, cmd_prev, step_dt);
      const ObservationG obs =
          build_obs_g(stack.estimator().output(), stack.beta_g(), script.velocity, accel, gait_prev_raw);
      gait_prev_raw = policy_action(sel_ckpt->net, sel_ckpt->obs_norm, obs)[0];
      gait = gait_from_action(gait_prev_raw);
      SelectionTraceRow row;
      row.time = t;
      row.costs.fill(std::numeric_limits<double>::quiet_NaN());
      row.chosen = gait;
      row.kappa = stack.beta_g().kappa;
      res.selection.push_back(row);
      if (selection) write_selection_trace_row(*selection, row);
    }
    cmd_prev = script.velocity;
    stack.set_command({script.velocity, gait});
    if (ctrl_ckpt) drive_locomotion_policy(stack, ctrl_ckpt->net, ctrl_ckpt->obs_norm);

    SelectionStep st;
    try {
      st = stack.selection_step();
    } catch (const SimulationDiverged&) {
      res.failed = true;
      res.failure_time = stack.time();
      break;
    }
    ++steps_done;
    const RewardBreakdownG r = reward_gait_selection(st.metrics, script.velocity, gait, prev, st.velocity);
    prev = gait;

    GaitStats& gs = per_gait[static_cast<size_t>(gait_index(gait))];
    ++gs.steps;
    gs.cot.add(st.metrics.cot);
    gs.tau_pct.add(st.metrics.tau_pct);
    gs.w_ext.add(st.metrics.w_ext);
    gs.c_avg_err.add(st.metrics.c_avg_err);
    gs.planar_error.add(st.planar_error);
    cot.add(st.metrics.cot);
    tau_pct.add(st.metrics.tau_pct);
    w_ext.add(st.metrics.w_ext);
    c_avg_err.add(st.metrics.c_avg_err);
    planar_error.add(st.planar_error);
    r_g.add(r.total);

    const double speed = script.velocity.head<2>().norm();
    Bin& bin = bins[static_cast<int>(std::floor(speed / s.bin_width + 1e-9))];
    ++bin.steps;
    ++bin.counts[static_cast<size_t>(gait_index(gait))];
    if (speed < 1e-9) {
      ++zero_steps;
      zero_stand += gait == GaitId::Stand ? 1 : 0;
    }

    if (timeseries) {
      const SimState& x = stack.sim().state();
      const Vec3 rpy = roll_pitch_yaw(x.rotation);
      const BetaL& bl = stack.beta_l();
      std::ostream& o = *timeseries;
      o << stack.time() << ',' << script.velocity.x() << ',' << script.velocity.y() << ',' << script.velocity.z()
        << ',' << gait_index(gait) << ',' << gait_index(stack.scheduler().state().active_id) << ','
        << (stack.beta_g().kappa ? 1 : 0) << ',' << x.position.x() << ',' << x.position.y() << ',' << x.position.z()
        << ',' << rpy.x() << ',' << rpy.y() << ',' << rpy.z() << ',' << st.velocity.x() << ',' << st.velocity.y()
        << ',' << st.velocity.z();
      for (int i = 0; i < kNumLegs; ++i) o << ',' << (x.contact[static_cast<size_t>(i)] ? 1 : 0);
      for (int i = 0; i < kNumLegs; ++i) o << ',' << (bl.contact_ref[static_cast<size_t>(i)] ? 1 : 0);
      for (int i = 0; i < kNumLegs; ++i) o << ',' << bl.px[i];
      for (int i = 0; i < kNumLegs; ++i) o << ',' << bl.py[i];
      for (int i = 0; i < kNumLegs; ++i) o << ',' << bl.pz[i];
      o << ',' << stack.beta_g().omega_stab;
      put_opt(o, st.metrics.cot);
      o << ',' << st.metrics.tau_pct;
      put_opt(o, st.metrics.w_ext);
      o << ',' << st.metrics.c_avg_err << ',' << st.planar_error << ',' << r.r_v << ',' << r.r_u << ',' << r.total
        << '\n';
    }

    if (stack.fallen()) {
      res.failed = true;
      res.failure_time = stack.time();
      break;
    }
  }

  nlohmann::json& j = res.summary;
  j["name"] = s.name;
  j["seed"] = s.seed;
  j["terrain"] = {{"level", s.terrain_level}, {"seed", s.terrain_seed}};
  j["duration"] = s.duration;
  j["simulated_time"] = stack.time();
  j["steps"] = steps_done;
  j["failed"] = res.failed;
  j["failure_time"] = res.failure_time ? nlohmann::json(*res.failure_time) : nlohmann::json(nullptr);
  j["means"] = {{"cot", cot.json()},         {"tau_pct", tau_pct.json()},           {"w_ext", w_ext.json()},
                {"c_avg_err", c_avg_err.json()}, {"planar_error", planar_error.json()}, {"r_g", r_g.json()}};

  nlohmann::json pg = nlohmann::json::object();
  for (int g = 0; g < kNumGaits; ++g) {
    const GaitStats& gs = per_gait[static_cast<size_t>(g)];
    if (gs.steps == 0) continue;
    pg[std::string(gait_name(gait_from_index(g)))] = {
        {"steps", gs.steps},        {"cot", gs.cot.json()},
        {"tau_pct", gs.tau_pct.json()}, {"w_ext", gs.w_ext.json()},
        {"c_avg_err", gs.c_avg_err.json()}, {"planar_error", gs.planar_error.json()}};
  }
  j["per_gait"] = pg;

  nlohmann::json jb = nlohmann::json::array();
  nlohmann::json curves = nlohmann::json::object();
  bool monotone = true;
  std::optional<double> last_run;
  for (const auto& [b, bin] : bins) {
    if (bin.steps == 0) continue;
    nlohmann::json hist = nlohmann::json::object();
    int best = 0;
    for (int g = 0; g < kNumGaits; ++g) {
      const int c = bin.counts[static_cast<size_t>(g)];
      if (c > 0) hist[std::string(gait_name(gait_from_index(g)))] = c;
      if (c > bin.counts[static_cast<size_t>(best)]) best = g;
    }
    const double share = static_cast<double>(bin.counts[static_cast<size_t>(best)]) / bin.steps;
    const double run_fraction =
        static_cast<double>(bin.counts[static_cast<size_t>(gait_index(GaitId::Run))]) / bin.steps;
    if (last_run && run_fraction < *last_run) monotone = false;
    last_run = run_fraction;
    jb.push_back({{"lo", b * s.bin_width},
                  {"hi", (b + 1) * s.bin_width},
                  {"steps", bin.steps},
                  {"histogram", hist},
                  {"dominant", std::string(gait_name(gait_from_index(best)))},
                  {"dominant_share", share},
                  {"transition_phase", *detect_transition_phase(std::vector<double>(bin.counts.begin(), bin.counts.end()))},
                  {"run_fraction", run_fraction}});
  }
  if (s.selector == SelectorKind::Oracle) {
    for (int g = 0; g < kNumGaits; ++g) {
      nlohmann::json pts = nlohmann::json::array();
      for (const auto& [b, bin] : bins) {
        const MeanAcc& m = bin.cot[static_cast<size_t>(g)];
        if (m.n > 0) pts.push_back({{"speed", (b + 0.5) * s.bin_width}, {"cot", m.sum / m.n}});
      }
      if (!pts.empty()) curves[std::string(gait_name(gait_from_index(g)))] = pts;
    }
  }
  j["bin_width"] = s.bin_width;
  j["bins"] = jb;
  j["run_fraction_nondecreasing"] = monotone;
  j["cot_curves"] = curves;
  j["stand_at_zero"] = zero_steps > 0 ? nlohmann::json(static_cast<double>(zero_stand) / zero_steps) : nlohmann::json(nullptr);
  return res;
}

RunResult run_scenario_to_dir(const Scenario& s, const std::string& out_dir) {
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  std::ofstream ts(dir / s.outputs.timeseries);
  std::ofstream sel(dir / s.outputs.selection);
  if (!ts || !sel) throw InvalidInput("cannot write run outputs in " + out_dir);
  RunResult r = run_scenario(s, &ts, &sel);
  std::ofstream sum(dir / s.outputs.summary);
  if (!sum) throw InvalidInput("cannot write summary in " + out_dir);
  sum << r.summary.dump(2) << '\n';
  return r;
}

nlohmann::json export_summary(const std::vector<nlohmann::json>& runs) {
  if (runs.empty()) throw InvalidInput("export_summary: no runs");
  static const std::array<const char*, 4> kMetrics{"cot", "tau_pct", "w_ext", "c_avg_err"};
  auto metric = [](const nlohmann::json& run, const char* m) -> std::optional<double> {
    if (!run.contains("means") || !run["means"].contains(m) || run["means"][m].is_null()) return std::nullopt;
    return std::abs(run["means"][m].get<double>());
  };

  std::map<std::string, double> best;
  for (const auto& r : runs) {
    if (r.value("failed", false)) continue;
    for (const char* m : kMetrics) {
      if (auto v = metric(r, m); v && (!best.count(m) || *v < best[m])) best[m] = *v;
    }
  }

  nlohmann::json rows = nlohmann::json::array();
  int failures = 0;
  for (const auto& r : runs) {
    const bool failed = r.value("failed", false);
    failures += failed ? 1 : 0;
    nlohmann::json row = {{"name", r.value("name", std::string("run"))}, {"failed", failed}};
    nlohmann::json raw = nlohmann::json::object(), norm = nlohmann::json::object();
    for (const char* m : kMetrics) {
      const auto v = metric(r, m);
      raw[m] = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
      if (failed || !v || !best.count(m)) {
        norm[m] = nullptr;
      } else if (best[m] == 0.0) {
        norm[m] = *v == 0.0 ? nlohmann::json(1.0) : nlohmann::json(nullptr);
      } else {
        norm[m] = *v / best[m];
      }
    }
    row["means"] = raw;
    row["normalized"] = norm;
    rows.push_back(row);
  }
  return {{"runs", rows}, {"failures", failures}, {"completed", static_cast<int>(runs.size()) - failures}};
}

void write_summary_table_csv(std::ostream& out, const nlohmann::json& table) {
  static const std::array<const char*, 4> kMetrics{"cot", "tau_pct", "w_ext", "c_avg_err"};
  out << "name,failed";
  for (const char* m : kMetrics) out << ',' << m;
  for (const char* m : kMetrics) out << ",norm_" << m;
  out << '\n';
  auto cell = [&](const nlohmann::json& v) {
    out << ',';
    if (!v.is_null()) out << v.get<double>();
  };
  for (const auto& r : table.at("runs")) {
    out << r.at("name").get<std::string>() << ',' << (r.at("failed").get<bool>() ? 1 : 0);
    for (const char* m : kMetrics) cell(r.at("means").at(m));
    for (const char* m : kMetrics) cell(r.at("normalized").at(m));
    out << '\n';
  }
}

void write_gait_refs(std::ostream& out, const GaitTable& table, GaitId gait, double t0, double t1, double dt) {
  if (!(dt > 0.0) || t1 < t0) throw InvalidInput("write_gait_refs: bad time range");
  const GaitParams& p = table[gait];
  SchedulerState st = make_scheduler_state(table, gait, t0);
  out << "time,phase_0,phase_1,phase_2,phase_3,contact_0,contact_1,contact_2,contact_3\n";
  out << std::setprecision(10);
  const auto n = static_cast<long>(std::floor((t1 - t0) / dt + 1e-9));
  for (long k = 0; k <= n; ++k) {
    const double t = t0 + static_cast<double>(k) * dt;
    st = update_phases(st, t);
    const ContactSet c = contact_reference(st.phases, p);
    out << t;
    for (double ph : st.phases) out << ',' << ph;
    for (bool b : c) out << ',' << (b ? 1 : 0);
    out << '\n';
  }
}

}  // namespace gaitlab
