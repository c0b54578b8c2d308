#include "gaitlab/biometrics.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <numeric>
#include <ostream>

namespace gaitlab {

std::optional<double> cost_of_transport(const Vec12& tau, const Vec12& qd, double mass, double speed_cmd,
                                         double g) {
  if (!(speed_cmd > 0.0)) return std::nullopt;
  double power = 0.0;
  for (int i = 0; i < kNumJoints; ++i) {
    power += std::max(tau[i] * qd[i] + kHeatCoefficient * tau[i] * tau[i], 0.0);
  }
  return power / (mass * g * speed_cmd);
}

double torque_saturation(const Vec12& tau, const Vec12& tau_lim) {
  if (!(tau_lim.array() > 0.0).all()) throw InvalidModel("torque_saturation: limits must be positive");
  return (tau.array() / tau_lim.array()).abs().mean();
}

double kinetic_energy(double mass, const Mat3& inertia, const Vec3& v, const Vec3& omega_body) {
  return 0.5 * mass * v.squaredNorm() + 0.5 * omega_body.dot(inertia * omega_body);
}

double potential_energy(double mass, double z, double g) { return mass * g * z; }

void EnergyAccumulator::reset(double t, double ek, double ep) {
  cycle_start = t;
  sum = 0.0;
  prev_ek = ek;
  prev_ep = ep;
  primed = true;
}

void EnergyAccumulator::step(double ek, double ep) {
  if (!primed) {
    reset(cycle_start, ek, ep);
    return;
  }
  const double dek = ek - prev_ek;
  const double dep = ep - prev_ep;
  sum += absolute ? std::abs(dek) + std::abs(dep) : dek - dep;
  prev_ek = ek;
  prev_ep = ep;
}

double EnergyAccumulator::close_cycle(double t) {
  const double total = sum;
  last_cycle = total;
  cycle_start = t;
  sum = 0.0;
  return total;
}

ContactErrorResult contact_error(const ContactSet& contact, const ContactSet& contact_ref) {
  ContactErrorResult out;
  int count = 0;
  for (size_t i = 0; i < kNumLegs; ++i) {
    out.mismatch[i] = contact[i] != contact_ref[i];
    count += out.mismatch[i] ? 1 : 0;
  }
  out.average = count / 4.0;
  return out;
}

std::optional<double> stride_cv(const std::vector<std::vector<double>>& touchdowns, double t_begin,
                                double t_end, int min_strides) {
  std::vector<double> durations;
  for (const auto& leg : touchdowns) {
    std::vector<double> ts;
    std::copy_if(leg.begin(), leg.end(), std::back_inserter(ts),
                 [&](double t) { return t >= t_begin && t <= t_end; });
    std::sort(ts.begin(), ts.end());
    for (size_t i = 1; i < ts.size(); ++i) durations.push_back(ts[i] - ts[i - 1]);
  }
  if (static_cast<int>(durations.size()) < std::max(min_strides, 1)) return std::nullopt;
  const double n = static_cast<double>(durations.size());
  const double mean = std::accumulate(durations.begin(), durations.end(), 0.0) / n;
  if (!(mean > 0.0)) return std::nullopt;
  double var = 0.0;
  for (double d : durations) var += (d - mean) * (d - mean);
  return std::sqrt(var / n) / mean;
}

std::optional<bool> detect_transition_phase(const std::vector<double>& histogram, double threshold) {
  const double total = std::accumulate(histogram.begin(), histogram.end(), 0.0);
  if (!(total > 0.0)) return std::nullopt;
  const double top = *std::max_element(histogram.begin(), histogram.end());
  return top / total <= threshold;
}

std::vector<std::optional<bool>> detect_transition_phases(const std::vector<std::vector<double>>& bins,
                                                          double threshold) {
  std::vector<std::optional<bool>> out;
  out.reserve(bins.size());
  for (const auto& b : bins) out.push_back(detect_transition_phase(b, threshold));
  return out;
}

namespace {

void write_opt(std::ostream& out, const std::optional<double>& v) {
  if (v) {
    out << *v;
  } else {
    out << "nan";
  }
}

}  // namespace

void write_metrics_csv_header(std::ostream& out) { out << "time,cot,tau_pct,w_ext,c_avg_err,stride_cv\n"; }

void write_metrics_csv_row(std::ostream& out, const MetricsSample& m) {
  out << m.time << ',';
  write_opt(out, m.cot);
  out << ',' << m.tau_pct << ',';
  write_opt(out, m.w_ext);
  out << ',' << m.c_avg_err << ',';
  write_opt(out, m.stride_cv);
  out << '\n';
}

}  // namespace gaitlab
