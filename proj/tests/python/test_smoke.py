import math

import pytest

import gaitlab


def test_gait_table():
    names = gaitlab.gait_names()
    assert names[:3] == ["stand", "trot", "run"]
    table = gaitlab.gait_table()
    assert table["trot"]["period"] == pytest.approx(0.4)
    assert table["stand"]["all_stance"]


def test_trot_phases():
    phases, contact = gaitlab.phases("trot", 0.1)
    assert phases == pytest.approx([0.25, 0.75, 0.75, 0.25])
    assert contact == [True, False, False, True]


def test_transition_formulas():
    assert gaitlab.transition_cycles(0.0) == 1.0
    assert gaitlab.transition_cycles(2.0) == pytest.approx(math.exp(-4.0), abs=1e-12)
    assert gaitlab.transition_resolution("trot", "run") == pytest.approx(25.0 / 9.0)
    assert gaitlab.transition_resolution("run", "trot") == pytest.approx(1.5625)


def test_metrics():
    tau = [10.0] + [0.0] * 11
    qd = [1.0] + [0.0] * 11
    assert gaitlab.cost_of_transport(tau, qd, 12.0, 1.0) == pytest.approx(40.0 / (12.0 * 9.81))
    assert gaitlab.cost_of_transport(tau, qd, 12.0, 0.0) is None
    assert gaitlab.contact_error([True, False, True, False], [False, True, False, True]) == 1.0
    assert gaitlab.psi(0.0) == 1.0


def test_run_scenario():
    scenario = {
        "name": "py",
        "duration": 1.0,
        "commands": {"type": "piecewise", "segments": [{"t": 0, "vx": 0.3, "gait": "trot"}]},
    }
    summary, csv = gaitlab.run_scenario(scenario, timeseries=True)
    assert summary["steps"] == 100
    assert not summary["failed"]
    assert csv.startswith("# gaitlab-timeseries v1")
    table = gaitlab.export_summary([summary])
    assert table["runs"][0]["normalized"]["c_avg_err"] == 1.0


def test_invalid_scenario():
    with pytest.raises(ValueError):
        gaitlab.run_scenario('{"duration": -1}')
