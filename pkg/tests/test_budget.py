import json

import pytest

from atomsim.budget import (BudgetEntry, CoherenceInputs, coherence_factor, compose_budget,
                            dephasing_error, detection_noise_bound, inferred_fidelity,
                            load_entries, polarization_error_bound)
from atomsim.config import data_path

COH = CoherenceInputs(7e-6, 130e-6, 125e-6, 14e-3, 7e-6, 1e-3)


def test_coherence_and_dephasing():
    c = coherence_factor(COH)
    assert c.value == pytest.approx(0.939, abs=1e-3)
    e = dephasing_error(COH)
    assert e.value == pytest.approx(0.0305, abs=5e-4)
    assert e.uncertainty == pytest.approx(c.uncertainty / 2)
    # Z parity is untouched: no idle time means no error
    assert dephasing_error(CoherenceInputs(0, 1, 0, 1)).value == 0.0
    with pytest.raises(ValueError):
        CoherenceInputs(1e-6, 0.0, 1e-6, 1.0)


def test_shipped_table():
    entries = load_entries(data_path("budget_entries.json"))
    assert len(entries) == 8
    r = compose_budget(entries, 0.942, 0.016)
    assert r.central == pytest.approx(0.0765, abs=1e-12)
    assert r.bound_total == pytest.approx(0.0091, abs=1e-12)
    assert r.consistent and r.to_dict()["verdict"] == "pass"
    lo, hi = r.predicted_fidelity
    assert lo == pytest.approx(1 - 0.0856) and hi == pytest.approx(1 - 0.0765)
    assert "atom dephasing" in r.table()


def test_inconsistent_budgets():
    big = [BudgetEntry("a", 0.7), BudgetEntry("b", 0.5)]
    r = compose_budget(big, 0.9, 0.01)
    assert not r.consistent and "> 1" in r.diagnostic
    r = compose_budget([BudgetEntry("a", 0.3, 0.01)], 0.95, 0.01)
    assert not r.consistent
    assert compose_budget([BudgetEntry("a", 0.3)]).consistent is None
    with pytest.raises(ValueError):
        compose_budget([])


def test_entry_validation(tmp_path):
    with pytest.raises(ValueError):
        BudgetEntry("x", -0.1)
    with pytest.raises(ValueError):
        BudgetEntry("x", 0.1, kind="guess")
    with pytest.raises(ValueError):
        BudgetEntry.from_dict({"name": "x", "value": 0.1, "extra": 1})
    p = tmp_path / "e.json"
    p.write_text(json.dumps([{"name": "x", "value": 0.01, "kind": "bound"}]))
    (e,) = load_entries(p)
    assert e.formatted() == "<1e-02"


def test_inferred_fidelity():
    f = inferred_fidelity(0.942, 0.016, 0.02, 0.02)
    assert f.value == pytest.approx(0.962, abs=1e-12)
    assert f.uncertainty == pytest.approx(0.0256, abs=1e-4)
    with pytest.warns(UserWarning):
        assert inferred_fidelity(1.0, 0.0, 0.02, 0.0).value == 1.0


def test_bounds():
    e = polarization_error_bound(1e4, 1.0)
    assert e.kind == "bound"
    assert e.value == pytest.approx(1e-4 + 3.05e-4, rel=1e-2)
    assert polarization_error_bound(1.0001, 89.0).value <= 1.0
    d = detection_noise_bound(400, 50.0, 0.006)
    assert d.value == pytest.approx(2e-5 / 0.006, rel=1e-12)
    with pytest.raises(ValueError):
        detection_noise_bound(0, 1, 0.1)
