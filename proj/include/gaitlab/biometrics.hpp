#pragma once

#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

#include "gaitlab/common.hpp"

namespace gaitlab {

/// Heat coefficient on tau^2 in the cost-of-transport power term.
inline constexpr double kHeatCoefficient = 0.3;

/// sum_i max(tau_i qd_i + 0.3 tau_i^2, 0) / (m g |v_cmd|); empty when |v_cmd| is zero.
std::optional<double> cost_of_transport(const Vec12& tau, const Vec12& qd, double mass, double speed_cmd,
                                         double g = kGravity);

/// Mean of |tau_i / tau_lim_i| over the 12 joints.
double torque_saturation(const Vec12& tau, const Vec12& tau_lim);

double kinetic_energy(double mass, const Mat3& inertia, const Vec3& v, const Vec3& omega_body);
double potential_energy(double mass, double z, double g = kGravity);

/// Running sum of energy changes over the current gait cycle.
struct EnergyAccumulator {
  /// Sum |dE_k| + |dE_p| instead of the signed dE_k - dE_p.
  bool absolute = false;
  double cycle_start = 0.0;
  double sum = 0.0;
  double prev_ek = 0.0;
  double prev_ep = 0.0;
  bool primed = false;
  /// Most recent completed-cycle value.
  std::optional<double> last_cycle;

  void reset(double t, double ek, double ep);
  /// Adds one control step's energy change.
  void step(double ek, double ep);
  /// Emits the cycle total at a leading-leg phase wrap and starts a new cycle.
  double close_cycle(double t);
};

struct ContactErrorResult {
  ContactSet mismatch{};
  double average = 0.0;
};

ContactErrorResult contact_error(const ContactSet& contact, const ContactSet& contact_ref);

/// Coefficient of variation of stride durations (population std / mean), pooled over legs.
/// Only touchdowns inside [t_begin, t_end] count; fewer than `min_strides` durations yields none.
std::optional<double> stride_cv(const std::vector<std::vector<double>>& touchdowns, double t_begin,
                                double t_end, int min_strides = 3);

/// Transition phase iff no gait holds more than 75% of a bin's selections; empty bin yields none.
std::optional<bool> detect_transition_phase(const std::vector<double>& histogram, double threshold = 0.75);
std::vector<std::optional<bool>> detect_transition_phases(const std::vector<std::vector<double>>& bins,
                                                          double threshold = 0.75);

struct MetricsSample {
  double time = 0.0;
  std::optional<double> cot;
  double tau_pct = 0.0;
  std::optional<double> w_ext;
  double c_avg_err = 0.0;
  std::optional<double> stride_cv;
};

void write_metrics_csv_header(std::ostream& out);
void write_metrics_csv_row(std::ostream& out, const MetricsSample& m);

}  // namespace gaitlab
