"""Quadruped gait scheduling, selection and metrics (native core)."""

import json

from . import _core
from ._core import (
    InvalidInput,
    contact_error,
    cost_of_transport,
    froude_number,
    gait_names,
    gait_table,
    phases,
    psi,
    torque_saturation,
    transition_cycles,
    transition_resolution,
)

__all__ = [
    "InvalidInput",
    "contact_error",
    "cost_of_transport",
    "export_summary",
    "froude_number",
    "gait_names",
    "gait_table",
    "phases",
    "psi",
    "run_scenario",
    "sweep",
    "torque_saturation",
    "transition_cycles",
    "transition_resolution",
]


def run_scenario(scenario, base_dir=".", timeseries=False):
    """Run a scenario given as a dict or JSON string.

    Returns the summary dict, or (summary, csv_text) when ``timeseries`` is set.
    """
    text = scenario if isinstance(scenario, str) else json.dumps(scenario)
    summary, csv = _core.run_scenario_json(text, base_dir, timeseries)
    summary = json.loads(summary)
    return (summary, csv) if timeseries else summary


def sweep(v_max=1.5, duration=20.0, seed=1):
    return json.loads(_core.sweep_json(v_max, duration, seed))


def export_summary(runs):
    return json.loads(_core.export_summary_json(json.dumps(list(runs))))
