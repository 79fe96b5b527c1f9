import numpy as np
import pytest

from atomsim.montecarlo import mc_decomposition, unravel
from atomsim.pulsescan import ScanConfig, build_flagged_scheme, pulse_for_duration, simulate_duration


def test_small_oracle_agrees_with_master_equation():
    est = mc_decomposition(12e-9, n_trajectories=4000, seed=7, n_steps=1000)
    me = simulate_duration(12e-9)
    assert abs(est.leakage_error - me.leakage_error) < 4 * est.leakage_se
    assert abs(est.double_excitation_error - me.double_excitation_error) < 4 * est.double_excitation_se
    assert abs(est.never_excited - me.never_excited) < 4 * est.never_excited_se + 1e-4


def test_seeded_runs_repeat():
    a = mc_decomposition(8e-9, n_trajectories=500, seed=3, n_steps=500)
    b = mc_decomposition(8e-9, n_trajectories=500, seed=3, n_steps=500)
    assert a == b


def test_unravel_states_are_normalized():
    scheme = build_flagged_scheme()
    pulse = pulse_for_duration(10e-9, scheme, ScanConfig())
    pops, jumps = unravel(scheme, pulse, 300, seed=1, n_steps=400)
    assert pops.shape == (300, scheme.dim)
    assert np.allclose(pops.sum(axis=1), 1.0, atol=1e-10)
    assert np.all(pops >= -1e-15)
    assert np.all(jumps == 0)
