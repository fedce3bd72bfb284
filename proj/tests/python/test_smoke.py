"""Smoke tests for the fcml Python bindings."""

import json

import numpy as np
import pytest

import fcml

FIG8 = [0.42, 0.37, 0.41, 0.46, 0.5]


def test_plant_helpers():
    vc = fcml.balanced_voltages(6, 500.0)
    np.testing.assert_allclose(vc, [100, 200, 300, 400])
    np.testing.assert_allclose(fcml.switch_stress(vc, 500.0), [100] * 5)
    # dS = [1, -1, 0, 1]
    assert fcml.pole_voltage([0, 1, 0, 0, 1], vc, 500.0) == pytest.approx(500.0 - (100 - 200 + 400))


def test_modulation_and_sampling():
    assert fcml.carrier_value(6, 120e3, 1, 0.0) == 0.0
    assert fcml.switch_states([1.0] * 5, 120e3, 1e-6) == [1] * 5
    assert fcml.switch_states([0.0] * 5, 120e3, 1e-6) == [0] * 5
    assert fcml.dead_duty_set(5) == pytest.approx([0.5])
    assert fcml.n_dis(6) == 10
    assert fcml.select_ms(6, 47) == 47
    with pytest.raises(ValueError):
        fcml.select_ms(6, 5)
    assert issubclass(fcml.ValidationError, ValueError)


def test_estimator_updates():
    out = fcml.feedback_update(np.zeros(4), [-1, 0, 0, 0], 100.0, 0, 500.0, 0.5)
    np.testing.assert_allclose(out, [50, 0, 0, 0])
    ff = fcml.feedforward_update(10.0, [0.01, 0, 0, 0], np.full(4, 2.2e-6), 40e-6)
    assert ff[0] == pytest.approx(1.818, abs=1e-3)
    assert fcml.alpha_stability_limit(6) == 0.5


def test_analysis():
    seq = fcml.switching_sequence(FIG8)
    assert seq.shape == (10, 4)
    assert fcml.stacked_rank(seq) == 4
    betas = [fcml.beta_max(FIG8, a) for a in (0.01, 0.02, 0.05, 0.1, 0.2, 0.4)]
    assert all(b < 1.0 for b in betas)
    assert all(b2 <= b1 + 1e-12 for b1, b2 in zip(betas, betas[1:]))
    p = fcml.system_matrix(seq[0], 0.3)
    np.testing.assert_allclose(np.sort(np.linalg.eigvalsh(p)),
                               fcml.system_matrix_eigenvalues(seq[0], 0.3), atol=1e-10)
    rep = fcml.full_rank_feasibility(4, 1.0, 0.05)
    assert rep.feasible
    assert not fcml.full_rank_feasibility(7, 1.0, 0.05).feasible
    with pytest.raises(ValueError):
        fcml.full_rank_feasibility(6, 0.2, 0.0)


def test_run_scenario():
    cfg = json.loads(fcml.default_config_json())
    assert cfg["schema_version"] == 1
    res = fcml.run_scenario(json.dumps(cfg), ["scenario.duration=0.002"])
    n = len(res["t"])
    assert n > 40
    assert res["vc"].shape == (n, 4)
    assert res["duty"].shape == (n, 5)
    assert np.all(np.diff(res["t"]) > 0)
    # the reference event at 0.145 s lies beyond this short run
    assert len(res["segments"]) == 1
    assert res["segments"][0]["t_end"] == pytest.approx(0.002, rel=1e-6)
    with pytest.raises(ValueError):
        fcml.run_scenario("{}", ["scenario.duration=0"])
    with pytest.raises(fcml.DivergenceError):
        fcml.run_scenario("{}", ["scenario.duration=0.01", "converter.flying_capacitance=1e-15"])
