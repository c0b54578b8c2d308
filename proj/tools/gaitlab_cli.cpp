#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <thread>

#include "gaitlab/experiment.hpp"
#include "gaitlab/training.hpp"

namespace fs = std::filesystem;
using namespace gaitlab;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  std::optional<int> terrain_level;
  std::string out_dir = "runs";
  std::string config;
};

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidInput(path + ": " + e.what());
  }
}

nlohmann::json load_config(const Globals& g) { return g.config.empty() ? nlohmann::json::object() : read_json(g.config); }

StackConfig stack_from_config(const nlohmann::json& c, StackConfig s = {}) {
  if (c.contains("robot")) s.model = robot_model_from_json(c.at("robot"), s.model);
  if (c.contains("sim")) s.sim = sim_config_from_json(c.at("sim"), s.sim);
  if (c.contains("gaits")) s.gaits = GaitTable::from_json(c.at("gaits"), s.gaits);
  return s;
}

Scenario with_globals(Scenario s, const Globals& g, const nlohmann::json& config) {
  if (g.seed) s.seed = *g.seed;
  if (g.terrain_level) s.terrain_level = *g.terrain_level;
  s.stack = stack_from_config(config, s.stack);
  validate(s);
  return s;
}

void print_run(const RunResult& r, const std::string& dir) {
  const auto& m = r.summary.at("means");
  std::cout << r.summary.at("name").get<std::string>() << ": " << (r.failed ? "FAILED" : "ok")
            << "  steps=" << r.summary.at("steps") << "  planar_error=" << m.at("planar_error")
            << "  c_avg_err=" << m.at("c_avg_err") << "  cot=" << m.at("cot") << "  -> " << dir << '\n';
}

int cmd_gait_refs(const Globals& g, const std::string& gait, double t0, double t1, double dt, bool to_stdout) {
  const StackConfig s = stack_from_config(load_config(g));
  if (to_stdout) {
    write_gait_refs(std::cout, s.gaits, gait_from_name(gait), t0, t1, dt);
    return 0;
  }
  fs::create_directories(g.out_dir);
  const fs::path path = fs::path(g.out_dir) / ("gait_refs_" + gait + ".csv");
  std::ofstream out(path);
  write_gait_refs(out, s.gaits, gait_from_name(gait), t0, t1, dt);
  std::cout << path.string() << '\n';
  return 0;
}

int cmd_simulate(const Globals& g, const std::vector<std::string>& files, int jobs) {
  const nlohmann::json config = load_config(g);
  std::vector<Scenario> scenarios;
  for (const auto& f : files) scenarios.push_back(with_globals(load_scenario(f), g, config));

  std::atomic<size_t> next{0};
  std::atomic<int> failures{0};
  std::mutex io;
  auto worker = [&] {
    for (size_t i = next++; i < scenarios.size(); i = next++) {
      const std::string dir = (fs::path(g.out_dir) / scenarios[i].name).string();
      try {
        const RunResult r = run_scenario_to_dir(scenarios[i], dir);
        failures += r.failed ? 1 : 0;
        std::lock_guard<std::mutex> lock(io);
        print_run(r, dir);
      } catch (const std::exception& e) {
        ++failures;
        std::lock_guard<std::mutex> lock(io);
        std::cerr << scenarios[i].name << ": " << e.what() << '\n';
      }
    }
  };
  std::vector<std::thread> pool;
  for (int k = 1; k < std::max(1, jobs); ++k) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return failures == 0 ? 0 : 1;
}

int cmd_sweep(const Globals& g, double v_max, double duration) {
  const Scenario s = with_globals(sweep_scenario(v_max, duration, g.seed.value_or(1)), g, load_config(g));
  const std::string dir = (fs::path(g.out_dir) / s.name).string();
  const RunResult r = run_scenario_to_dir(s, dir);
  print_run(r, dir);
  for (const auto& b : r.summary.at("bins")) {
    std::cout << "  [" << b.at("lo").get<double>() << ", " << b.at("hi").get<double>() << ") "
              << b.at("dominant").get<std::string>() << " share=" << b.at("dominant_share").get<double>()
              << (b.at("transition_phase").get<bool>() ? " transition" : "") << '\n';
  }
  return r.failed ? 1 : 0;
}

int cmd_select(const Globals& g, const std::string& file) {
  Scenario s = with_globals(load_scenario(file), g, load_config(g));
  s.selector = SelectorKind::Oracle;
  validate(s);
  const std::string dir = (fs::path(g.out_dir) / s.name).string();
  const RunResult r = run_scenario_to_dir(s, dir);
  print_run(r, dir);
  return r.failed ? 1 : 0;
}

int cmd_train(const Globals& g, const std::string& kind, int iterations, int envs, int steps) {
  const nlohmann::json config = load_config(g);
  TrainConfig tc;
  if (config.contains("ppo")) tc.hypers = ppo_hypers_from_json(config.at("ppo"), tc.hypers);
  tc.hypers.n_envs = envs;
  tc.hypers.steps_per_batch = steps;
  tc.iterations = iterations;
  tc.seed = g.seed.value_or(0);
  tc.kind = kind;
  fs::create_directories(g.out_dir);
  tc.log_csv = (fs::path(g.out_dir) / (kind + "_log.csv")).string();
  tc.checkpoint_path = (fs::path(g.out_dir) / (kind + "_policy.json")).string();
  tc.on_iteration = [](const IterationLog& l) {
    if (l.iteration % 10 == 0) {
      std::cout << "iter " << l.iteration << "  reward " << l.mean_reward << "  std " << l.mean_std << '\n';
    }
  };

  RandomizationConfig rc;
  if (config.contains("randomization")) rc = randomization_from_json(config.at("randomization"), rc);
  const StackConfig sc = stack_from_config(config);

  EnvFactory factory;
  if (kind == "loco") {
    LocoEnvConfig ec;
    ec.stack = sc;
    ec.randomization = rc;
    factory = [ec](int) { return std::make_unique<LocoEnv>(ec); };
  } else {
    GaitEnvConfig ec;
    ec.stack = sc;
    ec.randomization = rc;
    if (g.terrain_level) ec.terrain_levels = {*g.terrain_level};
    factory = [ec](int) { return std::make_unique<GaitEnv>(ec); };
  }
  const TrainResult r = train(factory, tc);
  if (r.diverged) {
    std::cerr << "training diverged: " << r.divergence_message << '\n';
    return 1;
  }
  std::cout << tc.checkpoint_path << '\n';
  return 0;
}

int cmd_eval(const Globals& g, const std::string& checkpoint, const std::string& file) {
  Scenario s = with_globals(load_scenario(file), g, load_config(g));
  const Checkpoint c = load_checkpoint(checkpoint);
  if (c.net.obs_dim() == kObsLSize) {
    s.controller = ControllerKind::Policy;
    s.controller_checkpoint = checkpoint;
  } else if (c.net.obs_dim() == kObsGSize) {
    s.selector = SelectorKind::Policy;
    s.selector_checkpoint = checkpoint;
  } else {
    throw InvalidInput("checkpoint does not match either policy");
  }
  validate(s);
  const std::string dir = (fs::path(g.out_dir) / s.name).string();
  const RunResult r = run_scenario_to_dir(s, dir);
  print_run(r, dir);
  return r.failed ? 1 : 0;
}

int cmd_report(const Globals& g, const std::vector<std::string>& runs) {
  std::vector<nlohmann::json> summaries;
  for (const auto& p : runs) {
    const fs::path path = fs::is_directory(p) ? fs::path(p) / "summary.json" : fs::path(p);
    summaries.push_back(read_json(path.string()));
  }
  const nlohmann::json table = export_summary(summaries);
  fs::create_directories(g.out_dir);
  std::ofstream(fs::path(g.out_dir) / "report.json") << table.dump(2) << '\n';
  std::ofstream csv(fs::path(g.out_dir) / "report.csv");
  write_summary_table_csv(csv, table);
  write_summary_table_csv(std::cout, table);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gaitlab: quadruped gait scheduling, selection and training harness"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Random seed override");
  app.add_option("--terrain-level", g.terrain_level, "Terrain roughness level (0-3)")->check(CLI::Range(0, 3));
  app.add_option("--out-dir", g.out_dir, "Output directory");
  app.add_option("--config", g.config, "JSON overrides (robot, sim, gaits, ppo, randomization)")
      ->check(CLI::ExistingFile);

  std::string gait = "trot";
  double t0 = 0.0, t1 = 1.0, dt = 1e-3;
  bool to_stdout = false;
  auto* refs = app.add_subcommand("gait-refs", "Dump scheduler phases and contact references");
  refs->add_option("--gait", gait, "Gait name");
  refs->add_option("--t0", t0);
  refs->add_option("--t1", t1);
  refs->add_option("--dt", dt);
  refs->add_flag("--stdout", to_stdout, "Print instead of writing a file");

  std::vector<std::string> scenario_files;
  int jobs = 1;
  auto* sim = app.add_subcommand("simulate", "Run scenario files");
  sim->add_option("scenarios", scenario_files)->required()->check(CLI::ExistingFile);
  sim->add_option("-j,--jobs", jobs, "Parallel workers")->check(CLI::PositiveNumber);

  double v_max = 1.5, duration = 20.0;
  auto* sweep = app.add_subcommand("sweep", "Oracle gait selection over a velocity ramp");
  sweep->add_option("--v-max", v_max);
  sweep->add_option("--duration", duration);

  std::string scenario_file;
  auto* select = app.add_subcommand("select", "Oracle selection trace for a scenario");
  select->add_option("scenario", scenario_file)->required()->check(CLI::ExistingFile);

  std::string kind;
  int iterations = 500, envs = 8, steps = 64;
  auto* tr = app.add_subcommand("train", "Train a locomotion or gait policy with PPO");
  tr->add_option("kind", kind)->required()->check(CLI::IsMember({"loco", "gait"}));
  tr->add_option("--iterations", iterations)->check(CLI::PositiveNumber);
  tr->add_option("--envs", envs)->check(CLI::PositiveNumber);
  tr->add_option("--steps", steps, "Steps per environment per iteration")->check(CLI::PositiveNumber);

  std::string checkpoint;
  auto* ev = app.add_subcommand("eval", "Run a scenario with a trained policy");
  ev->add_option("checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
  ev->add_option("scenario", scenario_file)->required()->check(CLI::ExistingFile);

  std::vector<std::string> runs;
  auto* rep = app.add_subcommand("report", "Cross-run comparison table");
  rep->add_option("runs", runs, "Run directories or summary files")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*refs) return cmd_gait_refs(g, gait, t0, t1, dt, to_stdout);
    if (*sim) return cmd_simulate(g, scenario_files, jobs);
    if (*sweep) return cmd_sweep(g, v_max, duration);
    if (*select) return cmd_select(g, scenario_file);
    if (*tr) return cmd_train(g, kind, iterations, envs, steps);
    if (*ev) return cmd_eval(g, checkpoint, scenario_file);
    if (*rep) return cmd_report(g, runs);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
