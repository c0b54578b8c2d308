#pragma once

#include <array>
#include <iosfwd>
#include <limits>
#include <optional>
#include <vector>

#include "gaitlab/locomotion.hpp"
#include "gaitlab/observations.hpp"
#include "gaitlab/ppo.hpp"
#include "gaitlab/rewards.hpp"

namespace gaitlab {

struct SelectorConfig {
  double horizon = 1.0;
  double replan_period = 0.1;
  std::vector<GaitId> candidates{GaitId::Stand, GaitId::Trot,  GaitId::Run,   GaitId::Bound,
                                 GaitId::Pronk, GaitId::Limp,  GaitId::Amble, GaitId::Hop};
  /// Cost charged for every step left in the horizon once a rollout falls or diverges.
  double failure_cost = 10.0;
};

void validate(const SelectorConfig& cfg, const GaitTable& table);

/// Outcome of one candidate rollout. Metric means skip steps where the metric is undefined.
struct CandidateResult {
  double cost = std::numeric_limits<double>::quiet_NaN();
  bool failed = false;
  std::optional<double> cot;
  double tau_pct = 0.0;
  double c_avg_err = 0.0;
  std::optional<double> w_ext;
  double planar_error = 0.0;
};

struct OracleDecision {
  GaitId gait = GaitId::Stand;
  std::array<CandidateResult, kNumGaits> candidates{};
  /// Every candidate failed; stand was forced.
  bool emergency = false;
};

/// Mean per-step cost -r_G of holding `gait` for the horizon from a copy of `stack`.
CandidateResult evaluate_candidate(const LocomotionStack& stack, const Command& cmd, GaitId gait,
                                   GaitId incumbent, const SelectorConfig& cfg);

/// Receding-horizon argmin over the candidate gaits; ties keep the incumbent.
OracleDecision oracle_select(const LocomotionStack& stack, const Command& cmd, GaitId incumbent,
                             const SelectorConfig& cfg = {});

/// Maps the continuous gait head output to a gait: clamp to [0, 7], round to nearest.
GaitId gait_from_action(double raw);

/// Gait head forward pass on a raw o_G.
GaitId policy_select(const ActorCritic& net, const RunningNormalizer& norm, const ObservationG& obs);

struct SelectionTraceRow {
  double time = 0.0;
  std::array<double, kNumGaits> costs{};
  GaitId chosen = GaitId::Stand;
  bool kappa = false;
  bool emergency = false;
};

void write_selection_trace_header(std::ostream& out);
void write_selection_trace_row(std::ostream& out, const SelectionTraceRow& row);

/// Closed-loop wrapper: replans every `replan_period` and holds the choice in between.
class OracleSelector {
 public:
  explicit OracleSelector(SelectorConfig cfg = {}, GaitId initial = GaitId::Stand);

  /// Call once per selection step before stepping the stack.
  GaitId update(const LocomotionStack& stack, const Vec3& velocity_cmd);

  GaitId current() const { return current_; }
  const std::vector<SelectionTraceRow>& trace() const { return trace_; }
  const std::vector<OracleDecision>& decisions() const { return decisions_; }
  const SelectorConfig& config() const { return cfg_; }

 private:
  SelectorConfig cfg_;
  GaitId current_;
  std::optional<double> next_plan_;
  std::vector<SelectionTraceRow> trace_;
  std::vector<OracleDecision> decisions_;
};

}  // namespace gaitlab
