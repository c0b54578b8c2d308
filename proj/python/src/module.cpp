#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "gaitlab/experiment.hpp"

namespace py = pybind11;
using namespace gaitlab;

namespace {

ContactSet to_contacts(const std::array<bool, kNumLegs>& c) { return c; }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of the gaitlab package";

  py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);

  m.def("gait_names", [] {
    std::vector<std::string> out;
    for (int g = 0; g < kNumGaits; ++g) out.emplace_back(gait_name(gait_from_index(g)));
    return out;
  });

  m.def("gait_table", [] {
    const GaitTable t = GaitTable::defaults();
    py::dict out;
    for (int g = 0; g < kNumGaits; ++g) {
      const GaitParams& p = t[gait_from_index(g)];
      py::dict row;
      row["period"] = p.period;
      row["duty_factor"] = p.duty_factor;
      row["phase_offsets"] = std::vector<double>(p.phase_offsets.begin(), p.phase_offsets.end());
      row["all_stance"] = p.all_stance;
      out[py::str(std::string(gait_name(gait_from_index(g))))] = row;
    }
    return out;
  });

  m.def(
      "phases",
      [](const std::string& gait, double t, double t0) {
        const GaitTable table = GaitTable::defaults();
        const SchedulerState s = update_phases(make_scheduler_state(table, gait_from_name(gait), t0), t);
        return std::make_pair(std::vector<double>(s.phases.begin(), s.phases.end()),
                              std::vector<bool>(s.contact_ref.begin(), s.contact_ref.end()));
      },
      py::arg("gait"), py::arg("t"), py::arg("t0") = 0.0,
      "Per-leg phases and contact references of a default gait at time t.");

  m.def("froude_number", &froude_number, py::arg("speed"), py::arg("hip_height") = 0.25);
  m.def("transition_cycles", &transition_cycles, py::arg("froude"));
  m.def(
      "transition_resolution",
      [](const std::string& from, const std::string& to, double h) {
        const GaitTable t = GaitTable::defaults();
        return transition_resolution(t[gait_from_name(from)], t[gait_from_name(to)], h);
      },
      py::arg("from_gait"), py::arg("to_gait"), py::arg("hip_height") = 0.25);

  m.def(
      "cost_of_transport",
      [](const Vec12& tau, const Vec12& qd, double mass, double speed) { return cost_of_transport(tau, qd, mass, speed); },
      py::arg("tau"), py::arg("qd"), py::arg("mass"), py::arg("speed_cmd"));
  m.def("torque_saturation", &torque_saturation, py::arg("tau"), py::arg("tau_limit"));
  m.def(
      "contact_error",
      [](const std::array<bool, kNumLegs>& c, const std::array<bool, kNumLegs>& ref) {
        return contact_error(to_contacts(c), to_contacts(ref)).average;
      },
      py::arg("contact"), py::arg("contact_ref"));
  m.def("psi", &psi, py::arg("x"));

  m.def(
      "run_scenario_json",
      [](const std::string& text, const std::string& base_dir, bool with_timeseries) {
        const Scenario s = parse_scenario(text, base_dir);
        std::ostringstream ts;
        RunResult r;
        {
          py::gil_scoped_release release;
          r = run_scenario(s, with_timeseries ? &ts : nullptr);
        }
        return std::make_pair(r.summary.dump(), ts.str());
      },
      py::arg("text"), py::arg("base_dir") = ".", py::arg("with_timeseries") = false);

  m.def(
      "sweep_json",
      [](double v_max, double duration, std::uint64_t seed) {
        const Scenario s = sweep_scenario(v_max, duration, seed);
        py::gil_scoped_release release;
        return run_scenario(s).summary.dump();
      },
      py::arg("v_max") = 1.5, py::arg("duration") = 20.0, py::arg("seed") = 1);

  m.def(
      "export_summary_json",
      [](const std::string& runs) {
        std::vector<nlohmann::json> v;
        for (const auto& r : nlohmann::json::parse(runs)) v.push_back(r);
        return export_summary(v).dump();
      },
      py::arg("runs"));
}
