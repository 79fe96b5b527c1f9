"""Acceptance gate: one pass/fail line per criterion (1-12).

Tolerances are pinned here, independent of the shipped golden file. Run with
``pytest tests/test_acceptance.py -v`` (lines appear in the terminal summary)
or ``python3 tests/test_acceptance.py``.
"""
import time

import numpy as np
import pytest

from atomsim import analysis, budget, collection, montecarlo, pulsescan
from atomsim.config import load_config
from atomsim.reproduce import drive_free_decay_error, round_trip_rate, synthetic_populations

RESULTS: dict[int, tuple[bool, str]] = {}


def record(n, ok, detail):
    RESULTS[n] = (bool(ok), detail)
    print(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


@pytest.fixture(scope="module")
def cfg():
    return load_config()


@pytest.fixture(scope="module")
def scan(cfg):
    t0 = time.perf_counter()
    pts = pulsescan.scan_pulse_duration(cfg.grid_ns * 1e-9, cfg.scan)
    return pts, time.perf_counter() - t0


@pytest.fixture(scope="module")
def thermal(cfg):
    t0 = time.perf_counter()
    res = collection.thermal_average(cfg.optics, cfg.trap, order=15)
    return res, time.perf_counter() - t0


def test_criterion_01_scan_optimum(scan):
    pts, secs = scan
    best = pulsescan.optimum(pts).t_pi * 1e9
    record(1, 6.0 <= best <= 10.0 and len(pts) == 30 and secs < 120,
           f"optimum {best:.2f} ns in [6, 10]; 30-point scan {secs:.1f} s < 120 s")


def test_criterion_02_totals(cfg):
    t12 = pulsescan.simulate_duration(12e-9, cfg.scan).total_error
    t30 = pulsescan.simulate_duration(30e-9, cfg.scan).total_error
    record(2, abs(t12 - 0.017) <= 0.005 and abs(t30 - 0.035) <= 0.010,
           f"total(12 ns) = {t12:.4f} (0.017 +- 0.005); total(30 ns) = {t30:.4f} (0.035 +- 0.010)")


def test_criterion_03_trajectory_oracle(cfg):
    zs = []
    for t in (8e-9, 12e-9, 30e-9):
        est = montecarlo.mc_decomposition(t, 100_000, seed=cfg.seeds[0], config=cfg.scan)
        me = pulsescan.simulate_duration(t, cfg.scan)
        zs.append((est.leakage_error - me.leakage_error) / est.leakage_se)
        zs.append((est.double_excitation_error - me.double_excitation_error)
                  / est.double_excitation_se)
    worst = float(np.max(np.abs(zs)))
    record(3, worst < 3.0, f"max |z| = {worst:.2f} < 3 over leakage and double excitation "
                           f"at 8, 12, 30 ns (1e5 trajectories)")


def test_criterion_04_lindblad_properties(cfg, scan):
    pts, _ = scan
    drift = max(p.diagnostics["trace_drift"] for p in pts)
    herm = max(p.diagnostics["hermiticity"] for p in pts)
    eig = min(p.diagnostics["min_eigenvalue"] for p in pts)
    decay = drive_free_decay_error(cfg)
    record(4, drift < 1e-8 and herm < 1e-10 and eig > -1e-8 and decay < 1e-5,
           f"trace drift {drift:.1e}, Hermiticity {herm:.1e}, min eigenvalue {eig:.1e}, "
           f"free decay rel. error {decay:.1e}")


def test_criterion_05_analytic_collection():
    diffs = [abs(collection.collection_efficiency_analytic(0.55, p)
                 - collection.collection_efficiency_quadrature(0.55, p)) for p in ("sigma+", "pi")]
    limit = max(abs(collection.collection_efficiency_analytic(1.0, p) - 0.5)
                for p in ("sigma+", "sigma-", "pi"))
    record(5, max(diffs) <= 1e-6 and limit <= 1e-9,
           f"|analytic - quadrature| = {max(diffs):.1e} <= 1e-6; |eta(NA=1) - 1/2| = {limit:.1e}")


def test_criterion_06_eta_cc(cfg, thermal):
    res, secs = thermal
    doubled = collection.thermal_average(cfg.optics, cfg.trap, order=30)
    change = abs(doubled.eta_cc - res.eta_cc)
    ok = abs(res.eta_cc - 0.04135) <= 0.004 and change <= res.convergence_estimate and secs < 300
    record(6, ok, f"eta_cc = {res.eta_cc:.5f} (0.04135 +- 0.004); doubled-order change "
                  f"{change:.1e} <= estimate {res.convergence_estimate:.1e}; {secs:.0f} s < 300 s")


def test_criterion_07_success_probability(cfg, thermal):
    res, _ = thermal
    ps = collection.success_probability(res.eta_cc, **cfg.losses)
    direct = collection.success_probability(0.04135, **cfg.losses)
    record(7, abs(ps - 0.0156) <= 0.0010 and abs(direct - 0.0156) <= 0.0010,
           f"P_s = {ps:.5f} (0.0156 +- 0.0010); direct product {direct:.5f}")


def test_criterion_08_fidelity_arithmetic():
    f = analysis.bell_fidelity(analysis.CorrelationSet(0.909, 0.919, 0.939)).value
    ideal = analysis.bell_fidelity(analysis.CorrelationSet(1, 1, 1)).value
    mixed = analysis.bell_fidelity(analysis.CorrelationSet(0, 0, 0)).value
    record(8, abs(f - 0.94175) <= 1e-12 and ideal == 1.0 and mixed == 0.25,
           f"F = {f!r}; ideal {ideal}; mixed {mixed}")


def test_criterion_09_lower_bound():
    ideal = analysis.DiagonalPopulations(0.5, 0.5, 0.0, 0.0)
    mixed = analysis.DiagonalPopulations(0.25, 0.25, 0.25, 0.25)
    a = analysis.fidelity_lower_bound(ideal, ideal).value
    b = analysis.fidelity_lower_bound(mixed, mixed).value
    c = analysis.fidelity_lower_bound(*synthetic_populations(0.931)).value
    record(9, a == 1.0 and b == 0.0 and abs(c - 0.931) <= 0.001,
           f"ideal {a}; mixed {b}; constructed {c:.6f} (0.931 +- 0.001)")


def test_criterion_10_dephasing():
    inp = budget.CoherenceInputs(7e-6, 130e-6, 125e-6, 14e-3)
    c = budget.coherence_factor(inp).value
    e = budget.dephasing_error(inp).value
    record(10, abs(c - 0.939) <= 0.001 and abs(e - 0.0305) <= 0.0005,
           f"C = {c:.5f} (0.939 +- 0.001); eps = {e:.5f} (0.0305 +- 0.0005)")


def test_criterion_11_inferred_fidelity():
    f = budget.inferred_fidelity(0.942, 0.016, 0.02, 0.02)
    record(11, abs(f.value - 0.962) <= 0.001 and abs(f.uncertainty - 0.026) <= 0.002,
           f"F_inf = {f.value:.4f} (0.962 +- 0.001); error {f.uncertainty:.4f} (0.026 +- 0.002)")


def test_criterion_12_fit_round_trips(cfg):
    kinds = ("histogram", "ramsey_130us", "ramsey_14ms", "rabi_109khz", "rabi_2.497khz", "parity")
    rates = {k: round_trip_rate(k, 200, cfg.seeds[0]) for k in kinds}
    shown = ", ".join(f"{k} {v:.3f}" for k, v in rates.items())
    record(12, min(rates.values()) >= 0.95, f"recovery within 3 sigma (>= 0.95): {shown}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
