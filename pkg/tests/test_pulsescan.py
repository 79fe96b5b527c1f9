import numpy as np
import pytest

from atomsim.atomic import SchemeConfig
from atomsim.pulsescan import (ScanConfig, default_grid, optimum, pulse_for_duration,
                               build_flagged_scheme, scan_pulse_duration, simulate_duration,
                               write_scan_csv)

LEAKAGE_12NS = 0.001207664370139588


@pytest.fixture(scope="module")
def coarse_scan():
    return scan_pulse_duration(np.array([3, 5, 7, 9, 11, 14, 18, 24, 32, 44, 60]) * 1e-9)


def test_golden_leakage_at_12ns():
    p = simulate_duration(12e-9)
    assert p.leakage_error == pytest.approx(LEAKAGE_12NS, abs=1e-6)
    assert p.total_error == pytest.approx(0.017, abs=0.005)


def test_bookkeeping_closes():
    p = simulate_duration(20e-9)
    assert sum(p.final_populations.values()) == pytest.approx(1.0, abs=1e-8)
    assert (p.bell_channel + p.never_excited + p.leakage_error + p.double_excitation_error
            == pytest.approx(1.0, abs=1e-12))
    assert 0 < p.bell_channel < 1
    assert p.final_populations["sink"] == pytest.approx(p.leakage_error, abs=1e-15)


def test_trends(coarse_scan):
    leak = np.array([p.leakage_error for p in coarse_scan])
    double = np.array([p.double_excitation_error for p in coarse_scan])
    # short pulses are spectrally broad (leakage), long pulses re-excite (double excitation)
    assert leak[0] > 10 * leak[-1]
    assert double[-1] > 5 * double[0]
    total = leak + double
    # the total error has a single minimum: its differences change sign exactly once
    signs = np.sign(np.diff(total))
    assert np.count_nonzero(np.diff(signs) != 0) == 1
    best = optimum(coarse_scan)
    assert 6e-9 <= best.t_pi <= 11e-9


def test_scan_is_sorted_and_rejects_bad_input():
    pts = scan_pulse_duration([12e-9, 6e-9])
    assert [p.t_pi for p in pts] == [6e-9, 12e-9]
    with pytest.raises(ValueError):
        scan_pulse_duration([])
    with pytest.raises(ValueError):
        scan_pulse_duration([-1e-9])


def test_pulse_conventions():
    scheme = build_flagged_scheme()
    w = pulse_for_duration(14e-9, scheme, ScanConfig())
    assert (w.t_start, w.t_end) == (0.0, 14e-9) and w.width == pytest.approx(2e-9)
    f = pulse_for_duration(14e-9, scheme, ScanConfig(convention="fwhm"))
    assert f.width * 2 * np.sqrt(2 * np.log(2)) == pytest.approx(14e-9)
    with pytest.raises(ValueError):
        ScanConfig(convention="bogus")
    with pytest.raises(ValueError):
        pulse_for_duration(0.0, scheme, ScanConfig())


def test_detuned_drive_excites_less():
    on = simulate_duration(12e-9)
    off = simulate_duration(12e-9, ScanConfig(SchemeConfig(detuning_rad_per_s=2e9)))
    assert off.never_excited > on.never_excited + 0.1


def test_default_grid_and_csv(tmp_path, coarse_scan):
    g = default_grid()
    assert g.size == 30 and g[0] == 2e-9 and g[-1] == 60e-9
    out = tmp_path / "scan.csv"
    write_scan_csv(coarse_scan, out)
    lines = out.read_text().splitlines()
    assert lines[0].startswith("t_pi_ns,leakage,double_excitation,total")
    assert len(lines) == len(coarse_scan) + 1
