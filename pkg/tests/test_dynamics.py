import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from atomsim.atomic import SchemeConfig, build_level_scheme
from atomsim.dynamics import (PulseProfile, calibrate_pi_pulse, check_density_matrix, evolve,
                              hamiltonian_at, jump_operators, lindblad_rhs, pure_state)
from atomsim.integrate import IntegrationError, dopri5

FLAGGED = build_level_scheme(SchemeConfig(flagged=True))


def random_density(n, seed):
    r = np.random.default_rng(seed)
    a = r.normal(size=(n, n)) + 1j * r.normal(size=(n, n))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def explicit_lindblad(scheme, pulse, rho, t):
    h = hamiltonian_at(scheme, pulse, t)
    out = -1j * (h @ rho - rho @ h)
    for j in jump_operators(scheme):
        L = np.zeros((scheme.dim, scheme.dim))
        L[j.target, j.source] = math.sqrt(j.rate)
        out += L @ rho @ L.T - 0.5 * (L.T @ L @ rho + rho @ L.T @ L)
    return out


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 31), st.floats(0.0, 2e9), st.sampled_from([-1, 0, 1]))
def test_rhs_matches_explicit_form_and_is_traceless(seed, omega, q):
    scheme = FLAGGED
    rho = random_density(scheme.dim, seed)
    pulse = PulseProfile(omega, 5e-9, 1e-9, q)
    d = lindblad_rhs(scheme, pulse, rho, 5.3e-9)
    ref = explicit_lindblad(scheme, pulse, rho, 5.3e-9)
    scale = np.max(np.abs(ref)) + scheme.gamma
    assert np.max(np.abs(d - ref)) <= 1e-12 * scale
    assert abs(np.trace(d)) <= 1e-12 * scale
    assert np.max(np.abs(d - d.conj().T)) <= 1e-12 * scale


@pytest.mark.parametrize("label", ["fp2_m+0", "fp3_m+2", "fp4_m-4", "fp2_m+1_flag"])
def test_drive_free_decay(label):
    scheme = FLAGGED
    i = scheme.index(label)
    t_end = 150e-9
    pulse = PulseProfile(0.0, 0.5 * t_end, t_end, 0, 0.0, t_end)
    ts = np.linspace(0, t_end, 16)[1:-1]
    traj = evolve(scheme, pulse, pure_state(scheme.dim, i), 0.0, t_end, sample_times=ts)
    got = np.array([s[i, i].real for s in traj.states])
    want = np.exp(-scheme.gamma * traj.sample_times)
    assert np.max(np.abs(got / want - 1)) < 1e-5
    # the decayed population ends up where the branching says
    assert traj.decay_flux[i] == pytest.approx(1 - got[-1], rel=1e-7)


def test_lossless_two_level_pi_pulse():
    # far-detuned f'=3,4 (off-resonant populations ~ (Omega/2 Delta)^2 ~ 1e-5) leave |3,0> <-> |2',0>; no decay
    cfg = SchemeConfig(gamma_rad_per_s=0.0, offset_f3_rad_per_s=2e10, offset_f4_rad_per_s=4e10)
    scheme = build_level_scheme(cfg)
    sigma = 10e-9
    pulse = PulseProfile.centered(calibrate_pi_pulse(scheme, sigma), sigma)
    traj = evolve(scheme, pulse, pure_state(scheme.dim, scheme.initial), pulse.t_start,
                  pulse.t_end, rtol=1e-10, atol=1e-12)
    assert traj.final[scheme.driven, scheme.driven].real >= 0.9999


def test_mirror_symmetry_of_populations():
    # pi drive from m=0 is symmetric under m -> -m
    scheme = FLAGGED
    sigma = 12e-9 / 7
    pulse = PulseProfile(calibrate_pi_pulse(scheme, sigma), 6e-9, sigma, 0, 0.0, 12e-9)
    traj = evolve(scheme, pulse, pure_state(scheme.dim, scheme.initial), 0.0, 12e-9)
    p = traj.final.diagonal().real
    for i, lvl in enumerate(scheme.levels):
        if lvl.two_m is None or lvl.two_m <= 0:
            continue
        mirror = lvl.label.replace(f"m+{lvl.two_m // 2}", f"m-{lvl.two_m // 2}")
        assert p[i] == pytest.approx(p[scheme.index(mirror)], abs=1e-10)


def test_invariants_hold_during_driven_evolution():
    scheme = FLAGGED
    sigma = 30e-9 / 7
    pulse = PulseProfile(calibrate_pi_pulse(scheme, sigma), 15e-9, sigma, 0, 0.0, 30e-9)
    traj = evolve(scheme, pulse, pure_state(scheme.dim, scheme.initial), 0.0, 30e-9,
                  sample_times=np.linspace(0, 30e-9, 7)[1:-1])
    d = traj.diagnostics
    assert d["trace_drift"] < 1e-8
    assert d["hermiticity"] < 1e-10
    assert d["min_eigenvalue"] > -1e-8
    for s in traj.states:
        check_density_matrix(s)
    assert np.allclose(traj.population_history.sum(axis=1), 1.0, atol=1e-8)


def test_evolve_input_validation():
    scheme = FLAGGED
    pulse = PulseProfile(0.0, 1e-9, 1e-9)
    with pytest.raises(ValueError):
        evolve(scheme, pulse, np.eye(3), 0, 1e-9)
    with pytest.raises(ValueError):
        evolve(scheme, pulse, pure_state(scheme.dim, 0), 1e-9, 0)
    bad = pure_state(scheme.dim, 0) * 2
    with pytest.raises(ValueError):
        evolve(scheme, pulse, bad, 0, 1e-9)


def test_pulse_profile_validation():
    with pytest.raises(ValueError):
        PulseProfile(1.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        PulseProfile(1.0, 0.0, 1.0, 2)
    p = PulseProfile.centered(2.0, 1e-9)
    assert p.envelope(p.center) == 2.0
    assert p.envelope(-1.0) == 0.0
    assert p.area() == pytest.approx(2.0 * 1e-9 * math.sqrt(2 * math.pi))


def test_dopri5_exponential_and_oscillator():
    y, st_ = dopri5(lambda t, y: -2.0 * y, 0.0, np.array([1.0]), 3.0, rtol=1e-10, atol=1e-12)
    assert y[0].real == pytest.approx(math.exp(-6.0), rel=1e-8)
    y, _ = dopri5(lambda t, y: np.array([y[1], -y[0]]), 0.0, np.array([1.0, 0.0]), 10 * math.pi,
                  rtol=1e-10, atol=1e-12)
    assert np.allclose(y.real, [1.0, 0.0], atol=1e-7)
    assert st_["accepted"] > 0


def test_dopri5_callbacks_can_abort():
    def on_step(t, y):
        if t > 0.5:
            raise IntegrationError("stop")

    with pytest.raises(IntegrationError):
        dopri5(lambda t, y: y, 0.0, np.array([1.0]), 1.0, on_step=on_step)
    with pytest.raises(ValueError):
        dopri5(lambda t, y: y, 1.0, np.array([1.0]), 0.0)
