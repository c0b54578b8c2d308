#pragma once

#include <nlohmann/json.hpp>

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "gaitlab/common.hpp"

namespace gaitlab {

enum class GaitId : int { Stand = 0, Trot, Run, Bound, Pronk, Limp, Amble, Hop };
inline constexpr int kNumGaits = 8;

std::string_view gait_name(GaitId id);
/// Throws InvalidInput outside [0, 7].
GaitId gait_from_index(int index);
/// Case-insensitive; "unnatural" is accepted as an alias of limp.
GaitId gait_from_name(std::string_view name);
inline int gait_index(GaitId id) { return static_cast<int>(id); }

/// One gait pattern: period, duty factor and per-leg phase offsets (FL, FR, RL, RR).
///
/// The stand gait is flagged with `all_stance`; its period is a placeholder and
/// its duty factor is 1 so that blending towards or away from it lifts and
/// plants the feet progressively.
struct GaitParams {
  double period = 0.4;
  double duty_factor = 0.5;
  std::array<double, kNumLegs> phase_offsets{};
  bool all_stance = false;

  double frequency() const { return 1.0 / period; }
};

/// Throws InvalidModel when T <= 0, d outside [0, 1) (stand excepted) or an offset outside [0, 1].
void validate(const GaitParams& gait);

class GaitTable {
 public:
  /// Compiled-in defaults; limp is the "unnatural" row of the published gait table.
  static GaitTable defaults();
  /// Overrides entries by name from `{"gaits": [{name, period, duty_factor, phase_offsets}]}`.
  static GaitTable from_json(const nlohmann::json& doc, GaitTable base = defaults());
  static GaitTable load(const std::string& path);

  const GaitParams& operator[](GaitId id) const { return gaits_[gait_index(id)]; }
  void set(GaitId id, const GaitParams& params);

 private:
  std::array<GaitParams, kNumGaits> gaits_{};
};

struct SchedulerConfig {
  double hip_height = 0.25;
  double nominal_height = 0.28;
  double raibert_gain = 0.03;
  Vec3 clamp_box{0.3, 0.2, 0.1};
  double swing_height_ratio = 0.25;
  /// Nominal foot positions in the base frame (z is -nominal_height).
  FootArray nominal_feet{Vec3(0.183, 0.1308, -0.28), Vec3(0.183, -0.1308, -0.28),
                         Vec3(-0.183, 0.1308, -0.28), Vec3(-0.183, -0.1308, -0.28)};
};

struct SchedulerState {
  std::array<double, kNumLegs> phases{};
  std::array<double, kNumLegs> period_starts{};

  GaitId active_id = GaitId::Stand;
  GaitParams active;
  std::optional<GaitId> target_id;
  GaitParams target;
  /// Parameters currently in force (blend of active and target during a transition).
  GaitParams effective;

  double progress = 0.0;    // eta
  double cycles = 1.0;      // C
  double resolution = 1.0;  // delta
  bool transitioning = false;  // kappa

  /// Time at which the leading-leg base phase was last zero (rebased when T changes).
  double phase_origin = 0.0;
  double last_time = 0.0;
  long base_cycles = 0;
  long completed_cycles = 0;
  bool cycle_wrapped = false;

  ContactSet contact_ref{true, true, true, true};
  std::array<Vec2, kNumLegs> liftoff{Vec2::Zero(), Vec2::Zero(), Vec2::Zero(), Vec2::Zero()};
  std::array<double, kNumLegs> liftoff_ground{};
};

SchedulerState make_scheduler_state(const GaitTable& table, GaitId initial, double t0);

/// Advances the per-leg phases to absolute time `t`.
SchedulerState update_phases(SchedulerState state, double t);

ContactSet contact_reference(const std::array<double, kNumLegs>& phases, const GaitParams& gait);

double froude_number(double speed, double hip_height);
double transition_cycles(double froude);
/// g / (h f^2); empty for the stand gait.
std::optional<double> omega_stab(const GaitParams& gait, double hip_height);
double transition_resolution(const GaitParams& current, const GaitParams& next, double hip_height);

/// Linear blend of T, d and theta; offsets follow the shortest wrap-around path.
GaitParams blend(const GaitParams& from, const GaitParams& to, double eta);

SchedulerState begin_transition(SchedulerState state, const GaitTable& table, GaitId target,
                                double froude, double hip_height);
SchedulerState step_transition(SchedulerState state, double dt);

/// Kinematic snapshot of the robot as seen by the scheduler (world frame).
struct BodyState {
  Vec3 position = Vec3::Zero();
  Mat3 rotation = Mat3::Identity();
  Vec3 linear_velocity = Vec3::Zero();
  Vec3 angular_velocity = Vec3::Zero();
  FootArray feet{Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
};

/// Velocity command [v_x, v_y, omega_z] in the heading frame plus the requested gait.
struct Command {
  Vec3 velocity = Vec3::Zero();
  GaitId gait = GaitId::Stand;
};

struct Footholds {
  Vec4 x = Vec4::Zero();
  Vec4 y = Vec4::Zero();
};

Footholds raibert_footholds(const BodyState& body, const Vec3& velocity_cmd, const GaitParams& gait,
                            const ContactSet& contact_ref, const SchedulerConfig& cfg);

double swing_height_reference(double phase, const GaitParams& gait, double nominal_height,
                              double terrain_z, double ratio = 0.25, double clamp = 0.1);

struct BetaL {
  ContactSet contact_ref{};
  Vec4 px = Vec4::Zero();
  Vec4 py = Vec4::Zero();
  Vec4 pz = Vec4::Zero();

  static constexpr int kSize = 16;
  Eigen::Matrix<double, kSize, 1> flatten() const;
  Vec3 foot(int leg) const { return {px[leg], py[leg], pz[leg]}; }
};

struct BetaG {
  ContactSet contact_ref{};
  Vec4 pz = Vec4::Zero();
  double omega_stab = 0.0;
  bool kappa = false;

  static constexpr int kSize = 10;
  Eigen::Matrix<double, kSize, 1> flatten() const;
};

using HeightFn = std::function<double(double, double)>;

std::pair<BetaL, BetaG> compute_beta(const SchedulerState& state, const GaitTable& table,
                                     const BodyState& body, const Command& cmd,
                                     const SchedulerConfig& cfg, const HeightFn& height = {});

/// Stateful wrapper used by the control loop: starts transitions when the
/// commanded gait changes, steps them, advances phases and tracks lift-off points.
class GaitScheduler {
 public:
  GaitScheduler(GaitTable table, SchedulerConfig cfg, GaitId initial, double t0,
                const BodyState& body, const HeightFn& height = {});

  std::pair<BetaL, BetaG> step(double t, const BodyState& body, const Command& cmd,
                               const HeightFn& height = {});

  const SchedulerState& state() const { return state_; }
  const GaitTable& table() const { return table_; }
  const SchedulerConfig& config() const { return cfg_; }
  /// The gait the scheduler is heading to (target during a transition).
  GaitId goal() const { return state_.transitioning ? *state_.target_id : state_.active_id; }

 private:
  GaitTable table_;
  SchedulerConfig cfg_;
  SchedulerState state_;
};

}  // namespace gaitlab
