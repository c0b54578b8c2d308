#include "gaitlab/gait_selector.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace gaitlab {

void validate(const SelectorConfig& cfg, const GaitTable& table) {
  if (!(cfg.replan_period > 0.0) || !(cfg.horizon > 0.0)) {
    throw InvalidInput("SelectorConfig: horizon and replan period must be positive");
  }
  if (cfg.candidates.empty()) throw InvalidInput("SelectorConfig: empty candidate set");
  for (GaitId g : cfg.candidates) {
    const GaitParams& p = table[g];
    if (!p.all_stance && cfg.horizon <= p.period) {
      throw InvalidInput("SelectorConfig: horizon must exceed the period of " + std::string(gait_name(g)));
    }
  }
}

CandidateResult evaluate_candidate(const LocomotionStack& stack, const Command& cmd, GaitId gait,
                                   GaitId incumbent, const SelectorConfig& cfg) {
  const double step_dt = stack.config().selection_decimation * stack.config().sim.dt;
  const int n = std::max(1, static_cast<int>(std::lround(cfg.horizon / step_dt)));

  LocomotionStack rollout(stack);
  rollout.set_command({cmd.velocity, gait});

  CandidateResult out;
  double cost = 0.0, cot_sum = 0.0, w_sum = 0.0;
  int cot_n = 0, w_n = 0, done = 0;
  GaitId prev = incumbent;
  for (; done < n; ++done) {
    SelectionStep st;
    try {
      st = rollout.selection_step();
    } catch (const SimulationDiverged&) {
      out.failed = true;
      break;
    }
    const RewardBreakdownG r = reward_gait_selection(st.metrics, cmd.velocity, gait, prev, st.velocity);
    prev = gait;
    cost -= r.total;
    if (st.metrics.cot) {
      cot_sum += *st.metrics.cot;
      ++cot_n;
    }
    if (st.metrics.w_ext) {
      w_sum += *st.metrics.w_ext;
      ++w_n;
    }
    out.tau_pct += st.metrics.tau_pct;
    out.c_avg_err += st.metrics.c_avg_err;
    out.planar_error += st.planar_error;
    if (rollout.fallen()) {
      out.failed = true;
      ++done;
      break;
    }
  }
  if (out.failed) cost += cfg.failure_cost * (n - done);
  out.cost = cost / n;
  if (done > 0) {
    out.tau_pct /= done;
    out.c_avg_err /= done;
    out.planar_error /= done;
  }
  if (cot_n > 0) out.cot = cot_sum / cot_n;
  if (w_n > 0) out.w_ext = w_sum / w_n;
  return out;
}

OracleDecision oracle_select(const LocomotionStack& stack, const Command& cmd, GaitId incumbent,
                             const SelectorConfig& cfg) {
  validate(cfg, stack.config().gaits);
  OracleDecision d;
  bool all_failed = true;
  for (GaitId g : cfg.candidates) {
    d.candidates[static_cast<size_t>(gait_index(g))] = evaluate_candidate(stack, cmd, g, incumbent, cfg);
    all_failed = all_failed && d.candidates[static_cast<size_t>(gait_index(g))].failed;
  }
  if (all_failed) {
    d.gait = GaitId::Stand;
    d.emergency = true;
    return d;
  }

  const bool incumbent_listed =
      std::find(cfg.candidates.begin(), cfg.candidates.end(), incumbent) != cfg.candidates.end();
  GaitId best = incumbent_listed ? incumbent : cfg.candidates.front();
  double best_cost = d.candidates[static_cast<size_t>(gait_index(best))].cost;
  for (GaitId g : cfg.candidates) {
    const double c = d.candidates[static_cast<size_t>(gait_index(g))].cost;
    if (c < best_cost) {
      best = g;
      best_cost = c;
    }
  }
  d.gait = best;
  return d;
}

GaitId gait_from_action(double raw) {
  if (!std::isfinite(raw)) throw InvalidInput("gait_from_action: non-finite action");
  const double c = std::clamp(raw, 0.0, static_cast<double>(kNumGaits - 1));
  return gait_from_index(static_cast<int>(std::lround(c)));
}

GaitId policy_select(const ActorCritic& net, const RunningNormalizer& norm, const ObservationG& obs) {
  if (net.obs_dim() != kObsGSize || net.act_dim() != 1) throw ContractViolation("policy_select: not a gait head");
  return gait_from_action(net.actor.forward(norm.normalize(obs)).col(0)[0]);
}

void write_selection_trace_header(std::ostream& out) {
  out << "time";
  for (int g = 0; g < kNumGaits; ++g) out << ",cost_" << gait_name(gait_from_index(g));
  out << ",chosen,kappa,emergency\n";
}

void write_selection_trace_row(std::ostream& out, const SelectionTraceRow& row) {
  out << row.time;
  for (double c : row.costs) out << ',' << c;
  out << ',' << gait_index(row.chosen) << ',' << (row.kappa ? 1 : 0) << ',' << (row.emergency ? 1 : 0) << '\n';
}

OracleSelector::OracleSelector(SelectorConfig cfg, GaitId initial) : cfg_(std::move(cfg)), current_(initial) {}

GaitId OracleSelector::update(const LocomotionStack& stack, const Vec3& velocity_cmd) {
  const double t = stack.time();
  if (next_plan_ && t + 1e-9 < *next_plan_) return current_;

  OracleDecision d = oracle_select(stack, {velocity_cmd, current_}, current_, cfg_);
  current_ = d.gait;
  next_plan_ = t + cfg_.replan_period;

  SelectionTraceRow row;
  row.time = t;
  for (size_t g = 0; g < row.costs.size(); ++g) row.costs[g] = d.candidates[g].cost;
  row.chosen = d.gait;
  row.kappa = stack.beta_g().kappa;
  row.emergency = d.emergency;
  trace_.push_back(row);
  decisions_.push_back(std::move(d));
  return current_;
}

}  // namespace gaitlab
