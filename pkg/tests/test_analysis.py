import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from atomsim import analysis as an
from atomsim.reproduce import synthetic


def test_g2_counts():
    g = an.g2_from_counts(4564, 4564, 2, 1_000_000)
    assert g.value == pytest.approx(0.096, abs=5e-4)
    assert g.uncertainty == pytest.approx(0.066, abs=0.005)
    assert an.g2_from_counts(100, 100, 0, 10_000).value == 0.0
    with pytest.raises(ValueError):
        an.g2_zero(0.0, 0.1, 0.0, 10)


def test_g2_from_timetags_counts_trials():
    recs = [an.TimeTagRecord(1, 0, 10), an.TimeTagRecord(1, 1, 12), an.TimeTagRecord(2, 0, 11),
            an.TimeTagRecord(3, 1, 500), an.TimeTagRecord(4, 1, 9)]
    g = an.g2_from_timetags(recs, 10)
    assert g.value == pytest.approx((1 / 10) / ((2 / 10) * (3 / 10)))
    gw = an.g2_from_timetags(recs, 10, window_ns=(0, 100))
    assert gw.value == pytest.approx((1 / 10) / ((2 / 10) * (2 / 10)))
    with pytest.raises(ValueError):
        an.TimeTagRecord(1, 2, 0)
    t, c = an.histogram_from_timetags(recs, 1, (0, 20))
    assert c.sum() == 4 and t[0] == 0.5


def test_emg_model_is_stable_and_normalized():
    t = np.linspace(-50, 400, 20001)
    y = an.emg_model(t, 10.0, 30.4, 2.0, 1.0)
    assert np.all(np.isfinite(y))
    assert np.trapezoid(y, t) == pytest.approx(1.0, abs=1e-4)
    # far tail and narrow-sigma limit do not overflow
    assert np.all(np.isfinite(an.emg_model(np.array([-1e4, 1e4]), 0, 1, 1e-3, 1)))


def test_histogram_fit_recovers_lifetime(rng):
    fit, data, truth = synthetic("histogram", rng)
    res = fit(*data)
    for k, v in truth.items():
        assert abs(res[k] - v) < 4 * res.error(k)
    assert res.dof > 0


def test_histogram_fit_rejects_sparse():
    with pytest.raises(ValueError):
        an.fit_arrival_histogram(np.arange(10.0), np.ones(10))


def test_parity_fit_complementary(rng):
    fit, (ds,), truth = synthetic("parity", rng)
    assert ds.complementary
    corr = fit(ds)
    assert abs(corr["correlation"] - 0.94) < 4 * corr["uncertainty"]
    pf = an.fit_parity(ds)
    # complementary curves are mirror images
    assert pf.even.a + pf.odd.a == pytest.approx(1.0, abs=1e-6)
    assert pf.even.contrast == pytest.approx(pf.odd.contrast, rel=1e-6)


def test_parity_fit_independent_and_exact():
    theta = np.arange(0, 181, 15.0)
    n = np.full(theta.size, 10_000)
    pe = 0.5 + 0.45 * np.cos(np.radians(4 * theta))
    even = np.round(n * pe * 0.9)
    odd = np.round(n * (1 - pe) * 0.9)
    ds = an.ParityDataset("Z", theta, even, odd, n)
    assert not ds.complementary
    c = an.correlation_from_fit(an.fit_parity(ds))
    assert c["correlation"] == pytest.approx(0.9 * 0.9, abs=2e-3)
    assert c["theta_star_deg"] == pytest.approx(0.0, abs=0.5) or \
        c["theta_star_deg"] == pytest.approx(90.0, abs=0.5)


def test_parity_requires_coverage():
    with pytest.raises(ValueError):
        an.fit_parity(an.ParityDataset("X", [0, 10, 20, 30, 40], [5] * 5, [5] * 5, [10] * 5))
    with pytest.raises(ValueError):
        an.fit_parity(an.ParityDataset("X", np.arange(6) * 5.0, [5] * 6, [5] * 6, [10] * 6))
    with pytest.raises(ValueError):
        an.ParityDataset("W", [0], [1], [1], [2])
    with pytest.raises(ValueError):
        an.ParityDataset("X", [0], [2], [1], [2])


def test_bell_fidelity_golden():
    f = an.bell_fidelity(an.CorrelationSet(0.909, 0.919, 0.939))
    assert f.value == pytest.approx(0.94175, abs=1e-12)
    assert an.bell_fidelity(an.CorrelationSet(1, 1, 1)).value == 1.0
    assert an.bell_fidelity(an.CorrelationSet(0, 0, 0)).value == 0.25
    with pytest.raises(ValueError):
        an.CorrelationSet(1.1, 0, 0)


@settings(max_examples=100, deadline=None)
@given(*[st.floats(-1, 1)] * 3)
def test_bell_fidelity_range(x, y, z):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        f = an.bell_fidelity(an.CorrelationSet(x, y, z))
    assert 0 <= f.value <= 1


def test_bell_fidelity_clips_with_warning():
    with pytest.warns(UserWarning):
        f = an.bell_fidelity(an.CorrelationSet(-1, -1, -1))
    assert f.value == 0.0


def test_lower_bound_limits_and_target():
    ideal = an.DiagonalPopulations(0.5, 0.5, 0.0, 0.0)
    mixed = an.DiagonalPopulations(0.25, 0.25, 0.25, 0.25)
    assert an.fidelity_lower_bound(ideal, ideal).value == 1.0
    assert an.fidelity_lower_bound(mixed, mixed).value == 0.0
    from atomsim.reproduce import synthetic_populations
    lb = an.fidelity_lower_bound(*synthetic_populations(0.931))
    assert lb.value == pytest.approx(0.931, abs=1e-12)
    assert 0 < lb.uncertainty < 0.05
    with pytest.raises(ValueError):
        an.fidelity_lower_bound(an.DiagonalPopulations(0.5, 0.5, 0.5, 0.0), ideal)


@pytest.mark.parametrize("kind", ["ramsey_130us", "ramsey_14ms"])
def test_ramsey_fit(kind, rng):
    fit, data, truth = synthetic(kind, rng)
    res = fit(*data)
    for k, v in truth.items():
        assert abs(res[k] - v) < 4 * res.error(k)
    assert res.extra["t2_star"] == pytest.approx(1 / res["gamma"])


def test_ramsey_undamped_gives_lower_bound():
    t = np.linspace(0, 1e-3, 41)
    p = 0.5 + 0.45 * np.cos(2 * np.pi * 5e3 * t)
    res = an.fit_ramsey(t, p, np.full(t.size, 1000))
    assert res.extra["t2_star_lower_bound"] is not None
    assert res.extra["t2_star_lower_bound"] >= 1e-3


@pytest.mark.parametrize("kind", ["rabi_109khz", "rabi_2.497khz"])
def test_rabi_fit(kind, rng):
    fit, data, truth = synthetic(kind, rng)
    res = fit(*data)
    assert abs(res["omega"] - truth["omega"]) < 4 * res.error("omega")


def test_two_photon_rabi_roundtrip():
    assert an.rf_rabi_from_effective(2.497, 13.5, 125.0) == pytest.approx(46.24, abs=0.01)
    assert an.two_photon_rabi(13.5, an.rf_rabi_from_effective(2.497, 13.5, 125.0), 125.0) \
        == pytest.approx(2.497, rel=1e-12)
    with pytest.raises(ValueError):
        an.two_photon_rabi(1, 1, 0)


def test_series_input_validation():
    with pytest.raises(ValueError):
        an.fit_rabi(np.arange(3.0), np.full(3, 0.5))
    with pytest.raises(ValueError):
        an.fit_ramsey(np.arange(20.0), np.full(20, 1.5))
