import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from atomsim.collection import (SIGMA_CHANNELS, OpticalSystem, PupilSamplingError, TrapGeometry,
                                collection_efficiency, collection_efficiency_analytic,
                                collection_efficiency_quadrature, dipole_field,
                                efficiency_vs_aperture, fiber_overlap, pupil_field,
                                success_probability, thermal_average, thermal_sigmas,
                                trap_frequencies)

OPTICS = OpticalSystem()


@pytest.mark.parametrize("p", ["sigma+", "sigma-", "pi"])
def test_dipole_pattern_is_normalized(p):
    # integral of 3/(8 pi) |n x e_p|^2 over the sphere is 1
    x, w = np.polynomial.legendre.leggauss(64)
    phi = np.linspace(0, 2 * np.pi, 128, endpoint=False)
    th = np.arccos(x)
    T, P = np.meshgrid(th, phi, indexing="ij")
    r = np.stack([np.sin(T) * np.cos(P), np.sin(T) * np.sin(P), np.cos(T)], axis=-1)
    i = np.sum(np.abs(dipole_field(r, p)) ** 2, axis=-1)
    total = 3 / (8 * np.pi) * (w @ i.sum(axis=1)) * (2 * np.pi / 128)
    assert total == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        dipole_field(np.zeros(3), p)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 0.99), st.sampled_from(["sigma+", "pi"]))
def test_analytic_matches_quadrature(na, p):
    assert collection_efficiency_analytic(na, p) == pytest.approx(
        collection_efficiency_quadrature(na, p), abs=1e-6)


def test_full_hemisphere_and_monotone():
    for p in ("sigma+", "sigma-", "pi"):
        assert abs(collection_efficiency_analytic(1.0, p) - 0.5) <= 1e-9
    nas = np.linspace(0.05, 1, 20)
    v = [collection_efficiency_analytic(a, "sigma+") for a in nas]
    assert np.all(np.diff(v) > 0)
    with pytest.raises(ValueError):
        collection_efficiency_analytic(0.0, "pi")
    with pytest.raises(ValueError):
        collection_efficiency_analytic(0.5, "x")


def test_flat_aperture_matches_cone_on_axis():
    for p in ("sigma+", "pi"):
        assert collection_efficiency((0, 0, 0), p, OPTICS) == pytest.approx(
            collection_efficiency_analytic(OPTICS.na, p), rel=1e-6)


def test_overlap_kernel_matches_numpy_pupil_field():
    offset = (80e-9, -40e-9, 300e-9)
    n = 256
    pf = pupil_field(offset, "sigma+", OPTICS, n)
    w = OPTICS.pupil_mode_waist
    mode = np.sqrt(2 / np.pi) / w * np.exp(-(pf.x ** 2 + pf.y ** 2) / w ** 2)
    nph = np.sum(np.abs(pf.field) ** 2) * pf.area_element
    ox = abs(np.sum(pf.field[:, 0] * mode) * pf.area_element) ** 2 / nph
    oy = abs(np.sum(pf.field[:, 1] * mode) * pf.area_element) ** 2 / nph
    assert fiber_overlap(offset, "sigma+", "x", OPTICS, n) == pytest.approx(ox, rel=1e-9)
    assert fiber_overlap(offset, "sigma+", "both", OPTICS, n) == pytest.approx(ox + oy, rel=1e-9)


def test_overlap_properties():
    ov = fiber_overlap((0, 0, 0), "sigma+", "both", OPTICS)
    assert 0 < ov < 1
    # a displaced atom couples worse; sigma+ and sigma- are mirror images
    assert fiber_overlap((0.5e-6, 0, 0), "sigma+", "both", OPTICS) < ov
    assert fiber_overlap((0, 0, 0), "sigma-", "both", OPTICS) == pytest.approx(ov, rel=1e-12)
    # a pi dipole on axis radiates no on-axis transverse mode
    assert fiber_overlap((0, 0, 0), "pi", "both", OPTICS) < 1e-6
    with pytest.raises(PupilSamplingError):
        fiber_overlap((0, 0, 40e-6), "sigma+", "both", OPTICS, 64)
    with pytest.raises(ValueError):
        fiber_overlap((0, 0, 0), "sigma+", "z", OPTICS)


def test_optical_system_consistency():
    assert OPTICS.aperture_radius == pytest.approx(OPTICS.focal_length * math.tan(OPTICS.theta_max))
    assert OpticalSystem.from_dict(OPTICS.to_dict()) == OPTICS
    with pytest.raises(ValueError):
        OpticalSystem(na=1.2)


def test_trap_closed_forms():
    trap = TrapGeometry()
    wr, wz = trap_frequencies(trap)
    assert wr / (2 * np.pi) == pytest.approx(32.37e3, rel=1e-3)
    assert wz / (2 * np.pi) == pytest.approx(7.05e3, rel=1e-3)
    sr, sz = thermal_sigmas(trap)
    assert sz / sr == pytest.approx(wr / wz, rel=1e-12)
    assert TrapGeometry.from_dict(trap.to_dict()) == trap


def test_thermal_average_limits_and_mc_agreement():
    cold = TrapGeometry(atom_temperature=0.0)
    r0 = thermal_average(OPTICS, cold, order=5)
    point = sum(ch.branching * collection_efficiency((0, 0, 0), ch.polarization, OPTICS)
                * fiber_overlap((0, 0, 0), ch.polarization, "both", OPTICS)
                for ch in SIGMA_CHANNELS)
    assert r0.eta_cc == pytest.approx(point, rel=1e-12)
    gh = thermal_average(OPTICS, TrapGeometry(), order=7, n_grid=256)
    mc = thermal_average(OPTICS, TrapGeometry(), method="monte-carlo", n_samples=200,
                         n_grid=256, seed=1)
    assert abs(gh.eta_cc - mc.eta_cc) < 2 * mc.convergence_estimate + gh.convergence_estimate
    assert gh.eta_cc < r0.eta_cc


def test_success_probability():
    assert success_probability(0.04135, 0.75, 0.52, 0.991, 0.983) == pytest.approx(0.015710, abs=1e-6)
    with pytest.raises(ValueError):
        success_probability(0.0)
    with pytest.raises(ValueError):
        success_probability(0.5, eta_det=1.5)


def test_aperture_sweep_is_monotone():
    rows = efficiency_vs_aperture(OPTICS, [2e-3, 4e-3, 8e-3], [1e-6, 20e-6],
                                  order=3, n_grid=256)
    assert len(rows) == 6
    for t in (1.0, 20.0):
        eta = [r["eta_cc"] for r in rows if r["temperature_uK"] == pytest.approx(t)]
        assert np.all(np.diff(eta) > 0)
    cold = [r["eta_cc"] for r in rows if r["temperature_uK"] == pytest.approx(1.0)]
    hot = [r["eta_cc"] for r in rows if r["temperature_uK"] == pytest.approx(20.0)]
    assert all(c > h for c, h in zip(cold, hot))
