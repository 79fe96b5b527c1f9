"""Photon collection and single-mode fiber coupling for an atom in a tweezer.

The emitter is a classical dipole at ``r'`` near the focus of an objective
with focal length f. The objective is a thin lens that flattens the spherical
wave (path length ``sqrt(x^2 + y^2 + f^2)``) onto its pupil plane at z = f,
where the field is overlapped with a TEM00 fiber mode of waist ``w_col``.

The quantization axis (and the pi dipole) points along the optical axis z.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numba
import numpy as np
from numpy.polynomial.hermite import hermgauss
from numpy.polynomial.legendre import leggauss
from scipy import constants

__all__ = [
    "CS_MASS",
    "EMISSION_WAVELENGTH",
    "OpticalSystem",
    "TrapGeometry",
    "EmissionChannel",
    "SIGMA_CHANNELS",
    "ALL_CHANNELS",
    "PupilSamplingError",
    "ConvergenceError",
    "ThermalResult",
    "polarization_vector",
    "dipole_field",
    "collection_efficiency_analytic",
    "collection_efficiency_quadrature",
    "collection_efficiency",
    "pupil_field",
    "fiber_overlap",
    "trap_frequencies",
    "thermal_sigmas",
    "thermal_average",
    "success_probability",
    "efficiency_vs_aperture",
]

CS_MASS = 132.905451961 * constants.atomic_mass
EMISSION_WAVELENGTH = 852.347e-9  # Cs D2, vacuum
DEFAULT_FOCAL_LENGTH = 12.5e-3


class PupilSamplingError(ValueError):
    """The pupil grid is too coarse for the phase structure of the field."""


class ConvergenceError(RuntimeError):
    def __init__(self, message, estimate):
        super().__init__(message)
        self.estimate = estimate


@dataclass(frozen=True)
class OpticalSystem:
    """Collection objective plus fiber mode.

    ``aperture_radius`` defaults to ``focal_length * tan(asin(na))``; if given
    it must agree with that to 1e-12 (relative).
    """

    na: float = 0.55
    pupil_mode_waist: float = 9.94e-3
    focal_length: float = DEFAULT_FOCAL_LENGTH
    wavelength: float = EMISSION_WAVELENGTH
    aperture_radius: float | None = None

    def __post_init__(self):
        if not 0 < self.na < 1:
            raise ValueError("na must lie in (0, 1)")
        for name in ("pupil_mode_waist", "focal_length", "wavelength"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        r = self.focal_length * math.tan(self.theta_max)
        if self.aperture_radius is None:
            object.__setattr__(self, "aperture_radius", r)
        elif abs(self.aperture_radius - r) > 1e-12 * r:
            raise ValueError("aperture_radius inconsistent with focal_length and na")

    @property
    def theta_max(self) -> float:
        return math.asin(self.na)

    @property
    def k(self) -> float:
        return 2 * math.pi / self.wavelength

    def with_aperture(self, r_eff: float) -> "OpticalSystem":
        """Same NA and mode waist, focal length scaled to give aperture radius r_eff."""
        return replace(self, focal_length=r_eff / math.tan(self.theta_max), aperture_radius=None)

    @classmethod
    def from_dict(cls, d: dict) -> "OpticalSystem":
        keys = {"na": "na", "pupil_mode_waist_m": "pupil_mode_waist",
                "focal_length_m": "focal_length", "wavelength_m": "wavelength",
                "aperture_radius_m": "aperture_radius"}
        unknown = set(d) - set(keys)
        if unknown:
            raise ValueError(f"unknown optics keys: {sorted(unknown)}")
        return cls(**{keys[k]: float(v) for k, v in d.items() if v is not None})

    def to_dict(self) -> dict:
        return {"na": self.na, "pupil_mode_waist_m": self.pupil_mode_waist,
                "focal_length_m": self.focal_length, "wavelength_m": self.wavelength,
                "aperture_radius_m": self.aperture_radius}


@dataclass(frozen=True)
class TrapGeometry:
    """Gaussian-beam optical tweezer holding a thermal atom.

    ``input_waist`` (beam waist before the objective) is kept as metadata;
    nothing here depends on it.
    """

    trap_depth: float = 200e-6  # U / k_B in K
    trap_waist: float = 1.10e-6
    trap_wavelength: float = 1064e-9
    atom_temperature: float = 5e-6
    atom_mass: float = CS_MASS
    input_waist: float | None = 12e-3

    def __post_init__(self):
        for name in ("trap_depth", "trap_waist", "trap_wavelength", "atom_mass"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.atom_temperature >= 0:
            raise ValueError("atom_temperature must be non-negative")

    @property
    def rayleigh_range(self) -> float:
        return math.pi * self.trap_waist ** 2 / self.trap_wavelength

    @classmethod
    def from_dict(cls, d: dict) -> "TrapGeometry":
        keys = {"trap_depth_K": "trap_depth", "trap_waist_m": "trap_waist",
                "trap_wavelength_m": "trap_wavelength", "atom_temperature_K": "atom_temperature",
                "atom_mass_kg": "atom_mass", "input_waist_m": "input_waist"}
        unknown = set(d) - set(keys)
        if unknown:
            raise ValueError(f"unknown trap keys: {sorted(unknown)}")
        return cls(**{keys[k]: (None if v is None else float(v)) for k, v in d.items()})

    def to_dict(self) -> dict:
        return {"trap_depth_K": self.trap_depth, "trap_waist_m": self.trap_waist,
                "trap_wavelength_m": self.trap_wavelength,
                "atom_temperature_K": self.atom_temperature, "atom_mass_kg": self.atom_mass,
                "input_waist_m": self.input_waist}


@dataclass(frozen=True)
class EmissionChannel:
    polarization: str
    branching: float

    def __post_init__(self):
        if self.polarization not in ("sigma+", "sigma-", "pi"):
            raise ValueError(f"unknown polarization {self.polarization!r}")
        if not 0 <= self.branching <= 1:
            raise ValueError("branching must be a probability")


SIGMA_CHANNELS = (EmissionChannel("sigma+", 2 / 7), EmissionChannel("sigma-", 2 / 7))
ALL_CHANNELS = SIGMA_CHANNELS + (EmissionChannel("pi", 3 / 7),)


def polarization_vector(p: str) -> np.ndarray:
    """Dipole unit vector e_p (spherical basis, z = quantization axis)."""
    s = 1 / math.sqrt(2)
    vecs = {"sigma+": [s, 1j * s, 0], "sigma-": [s, -1j * s, 0], "pi": [0, 0, 1]}
    if p not in vecs:
        raise ValueError(f"unknown polarization {p!r}")
    return np.array(vecs[p], dtype=complex)


def dipole_field(r, p: str, wavelength: float = EMISSION_WAVELENGTH) -> np.ndarray:
    """Far field ``(e_r x e_p) x e_r * exp(ikr) / r``; r may be (..., 3)."""
    r = np.asarray(r, dtype=float)
    dist = np.linalg.norm(r, axis=-1)
    if np.any(dist == 0):
        raise ValueError("field point coincides with the dipole")
    n = r / dist[..., None]
    ep = polarization_vector(p)
    proj = n @ ep
    amp = ep - n * proj[..., None]
    k = 2 * math.pi / wavelength
    return amp * (np.exp(1j * k * dist) / dist)[..., None]


def collection_efficiency_analytic(na: float, p: str) -> float:
    """Fraction of dipole emission inside the cone of half-angle asin(na)."""
    if not 0 < na <= 1:
        raise ValueError("na must lie in (0, 1]")
    c = math.sqrt(max(0.0, 1 - na * na))
    if p in ("sigma+", "sigma-"):
        return 0.5 - 3 / 8 * c - c ** 3 / 8
    if p == "pi":
        return 0.5 - 3 / 4 * c + c ** 3 / 4
    raise ValueError(f"unknown polarization {p!r}")


def collection_efficiency_quadrature(na: float, p: str, n_theta: int = 64, n_phi: int = 64) -> float:
    """Same quantity by direct quadrature of ``|dipole_field|^2`` over the cone."""
    theta_max = math.asin(na) if na < 1 else math.pi / 2
    xg, wg = leggauss(n_theta)
    th = 0.5 * theta_max * (xg + 1)
    wth = 0.5 * theta_max * wg
    ph = 2 * math.pi * np.arange(n_phi) / n_phi
    T, P = np.meshgrid(th, ph, indexing="ij")
    r = np.stack([np.sin(T) * np.cos(P), np.sin(T) * np.sin(P), np.cos(T)], axis=-1)
    e = dipole_field(r, p)
    integrand = (np.abs(e) ** 2).sum(axis=-1) * np.sin(T)
    return float(3 / (8 * math.pi) * (integrand.sum(axis=1) * (2 * math.pi / n_phi)) @ wth)


def collection_efficiency(offset, p: str, optics: OpticalSystem, n_r: int = 48, n_phi: int = 96) -> float:
    """Fraction of emission from an atom at ``offset`` that hits the pupil disk.

    Exact solid-angle integral over the flat aperture (polar Gauss-Legendre);
    at zero offset it equals :func:`collection_efficiency_analytic`.
    """
    x0, y0, z0 = (float(v) for v in offset)
    R, f = optics.aperture_radius, optics.focal_length
    xg, wg = leggauss(n_r)
    rho = 0.5 * R * (xg + 1)
    wr = 0.5 * R * wg * rho
    ph = 2 * math.pi * np.arange(n_phi) / n_phi
    X = rho[:, None] * np.cos(ph)[None, :]
    Y = rho[:, None] * np.sin(ph)[None, :]
    d = np.stack([X - x0, Y - y0, np.full_like(X, f - z0)], axis=-1)
    dist = np.linalg.norm(d, axis=-1)
    n = d / dist[..., None]
    proj = np.abs(n @ polarization_vector(p)) ** 2
    integrand = (1 - proj) * (f - z0) / dist ** 3
    return float(3 / (8 * math.pi) * (integrand.sum(axis=1) * (2 * math.pi / n_phi)) @ wr)


@dataclass
class PupilField:
    x: np.ndarray  # sample coordinates inside the aperture (m)
    y: np.ndarray
    field: np.ndarray  # (n_points, 3) complex
    area_element: float
    max_phase_step: float  # rad between adjacent samples


def _grid(optics: OpticalSystem, n: int):
    R = optics.aperture_radius
    xs = np.linspace(-R, R, n)
    return xs, xs[1] - xs[0]


def _phase_step(x, y, offset, optics, dx):
    # |grad phase| * dx, phase = k (|r - r'| - sqrt(x^2 + y^2 + f^2))
    x0, y0, z0 = offset
    f = optics.focal_length
    dist = np.sqrt((x - x0) ** 2 + (y - y0) ** 2 + (f - z0) ** 2)
    s = np.sqrt(x ** 2 + y ** 2 + f ** 2)
    gx = (x - x0) / dist - x / s
    gy = (y - y0) / dist - y / s
    return float(optics.k * dx * np.max(np.maximum(np.abs(gx), np.abs(gy))))


MIN_SAMPLES_PER_FRINGE = 8
ROUNDOFF_FLOOR = 1e-11


def pupil_field(offset, p: str, optics: OpticalSystem, n: int = 512) -> PupilField:
    """Photon field on the pupil plane after the lens phase, zero outside the aperture."""
    offset = tuple(float(v) for v in offset)
    xs, dx = _grid(optics, n)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    inside = X ** 2 + Y ** 2 <= optics.aperture_radius ** 2
    x, y = X[inside], Y[inside]
    step = _phase_step(x, y, offset, optics, dx)
    if step > 2 * math.pi / MIN_SAMPLES_PER_FRINGE:
        raise PupilSamplingError(
            f"{2 * math.pi / step:.2f} samples per phase fringe at offset {offset}; "
            f"need >= {MIN_SAMPLES_PER_FRINGE} (increase n)")
    f = optics.focal_length
    r = np.stack([x - offset[0], y - offset[1], np.full_like(x, f - offset[2])], axis=-1)
    e = dipole_field(r, p, optics.wavelength)
    e *= np.exp(-1j * optics.k * (np.sqrt(x ** 2 + y ** 2 + f ** 2) - f))[:, None]
    return PupilField(x, y, e, dx * dx, step)


@numba.njit(cache=True, fastmath=False)
def _overlap_kernel(xs, R, f, k, x0, y0, z0, ep, w):
    """Return (|<E, x>|, <E, y>, N_photon) sums over the pupil disk."""
    norm = 1.0 / (math.sqrt(math.pi / 2) * w)
    ax = 0j
    ay = 0j
    nph = 0.0
    n = xs.size
    for i in range(n):
        x = xs[i]
        for j in range(n):
            y = xs[j]
            rho2 = x * x + y * y
            if rho2 > R * R:
                continue
            dxp = x - x0
            dyp = y - y0
            dzp = f - z0
            dist = math.sqrt(dxp * dxp + dyp * dyp + dzp * dzp)
            nx = dxp / dist
            ny = dyp / dist
            nz = dzp / dist
            proj = nx * ep[0] + ny * ep[1] + nz * ep[2]
            ph = k * (dist - math.sqrt(rho2 + f * f) + f)
            c = (math.cos(ph) + 1j * math.sin(ph)) / dist
            ex = (ep[0] - nx * proj) * c
            ey = (ep[1] - ny * proj) * c
            ez = (ep[2] - nz * proj) * c
            g = norm * math.exp(-rho2 / (w * w))
            ax += ex * g
            ay += ey * g
            nph += (ex.real ** 2 + ex.imag ** 2 + ey.real ** 2 + ey.imag ** 2
                    + ez.real ** 2 + ez.imag ** 2)
    return ax, ay, nph


def fiber_overlap(offset, p: str, q: str = "both", optics: OpticalSystem | None = None,
                  n: int = 512) -> float:
    """Normalized overlap of the pupil field with the TEM00 fiber mode.

    ``q`` selects the fiber polarization: "x", "y", or "both" (their sum).
    The fiber mode is normalized over the whole plane, the photon field over
    the aperture, so the result lies in [0, 1].
    """
    optics = optics or OpticalSystem()
    if q not in ("x", "y", "both"):
        raise ValueError("q must be 'x', 'y' or 'both'")
    offset = tuple(float(v) for v in offset)
    xs, dx = _grid(optics, n)
    # aliasing guard on the aperture rim, where the phase gradient peaks
    rim = np.linspace(0, 2 * math.pi, 64, endpoint=False)
    R = optics.aperture_radius
    step = _phase_step(R * np.cos(rim), R * np.sin(rim), offset, optics, dx)
    if step > 2 * math.pi / MIN_SAMPLES_PER_FRINGE:
        raise PupilSamplingError(
            f"{2 * math.pi / step:.2f} samples per phase fringe at offset {offset}; "
            f"need >= {MIN_SAMPLES_PER_FRINGE} (increase n)")
    ax, ay, nph = _overlap_kernel(xs, R, optics.focal_length, optics.k, *offset,
                                  polarization_vector(p), optics.pupil_mode_waist)
    da = dx * dx
    nph *= da
    if nph == 0:
        return 0.0
    ox = abs(ax * da) ** 2 / nph
    oy = abs(ay * da) ** 2 / nph
    return {"x": ox, "y": oy, "both": ox + oy}[q]


def trap_frequencies(trap: TrapGeometry) -> tuple[float, float]:
    """Radial and axial harmonic frequencies (rad/s) at the bottom of the tweezer."""
    u = trap.trap_depth * constants.k
    w_r = math.sqrt(4 * u / (trap.atom_mass * trap.trap_waist ** 2))
    w_z = math.sqrt(2 * u / (trap.atom_mass * trap.rayleigh_range ** 2))
    return w_r, w_z


def thermal_sigmas(trap: TrapGeometry) -> tuple[float, float]:
    """Thermal position spreads (sigma_r, sigma_z) in m."""
    w_r, w_z = trap_frequencies(trap)
    v = math.sqrt(constants.k * trap.atom_temperature / trap.atom_mass)
    return v / w_r, v / w_z


@dataclass
class ThermalResult:
    eta_cc: float
    convergence_estimate: float
    method: str
    order: int
    evaluations: int
    sigma_r: float
    sigma_z: float
    per_channel: dict = field(default_factory=dict)


def _eta_point(offset, p, optics, n):
    return collection_efficiency(offset, p, optics) * fiber_overlap(offset, p, "both", optics, n)


def _gh_average(optics, sr, sz, p, order, n_grid, cache):
    xg, wg = hermgauss(order)
    xs = xg * math.sqrt(2)
    ws = wg / math.sqrt(math.pi)
    total = 0.0
    # the integrand depends on the transverse offset only through its length
    for i in range(order):
        for j in range(order):
            rho = math.hypot(xs[i], xs[j]) * sr
            for l in range(order):
                key = (p, round(rho, 16), round(xs[l] * sz, 16))
                if key not in cache:
                    cache[key] = _eta_point((rho, 0.0, xs[l] * sz), p, optics, n_grid)
                total += ws[i] * ws[j] * ws[l] * cache[key]
    return total


def thermal_average(optics: OpticalSystem | None = None, trap: TrapGeometry | None = None,
                    channels=SIGMA_CHANNELS, order: int = 15, method: str = "gauss-hermite",
                    n_samples: int = 2000, seed=0, n_grid: int = 512,
                    tolerance: float | None = None) -> ThermalResult:
    """Thermally averaged collection x coupling efficiency, summed over channels.

    Gauss-Hermite: the convergence estimate is the change from order
    ``order // 2 + 1`` to ``order`` (never below a relative roundoff floor). Monte Carlo: two standard errors of
    the sample mean. Raises :class:`ConvergenceError` if the estimate
    exceeds ``tolerance``.
    """
    optics = optics or OpticalSystem()
    trap = trap or TrapGeometry()
    sr, sz = thermal_sigmas(trap)
    per = {}
    estimate = 0.0
    evals = 0
    if method == "gauss-hermite":
        cache: dict = {}
        for ch in channels:
            if sr == 0 and sz == 0:
                v = v_low = _eta_point((0, 0, 0), ch.polarization, optics, n_grid)
            else:
                v = _gh_average(optics, sr, sz, ch.polarization, order, n_grid, cache)
                v_low = _gh_average(optics, sr, sz, ch.polarization, order // 2 + 1, n_grid, cache)
            per[ch.polarization] = ch.branching * v
            # floor at accumulated roundoff of the order^3-term sum
            estimate += ch.branching * max(abs(v - v_low), ROUNDOFF_FLOOR * abs(v))
        evals = max(len(cache), 1)
    elif method == "monte-carlo":
        rng = np.random.default_rng(seed)
        pts = rng.normal(size=(n_samples, 3)) * np.array([sr, sr, sz])
        var = 0.0
        for ch in channels:
            vals = np.array([_eta_point(r, ch.polarization, optics, n_grid) for r in pts])
            per[ch.polarization] = ch.branching * float(vals.mean())
            var += (ch.branching * vals.std(ddof=1)) ** 2 / n_samples
            evals += n_samples
        estimate = 2 * math.sqrt(var)
    else:
        raise ValueError(f"unknown method {method!r}")
    eta = float(sum(per.values()))
    if tolerance is not None and estimate > tolerance:
        raise ConvergenceError(
            f"thermal average not converged: estimate {estimate:.3g} > {tolerance:.3g}", estimate)
    return ThermalResult(eta, float(estimate), method, order, evals, sr, sz, per)


def success_probability(eta_cc: float, eta_trans: float = 1.0, eta_det: float = 1.0,
                        eta_pump: float = 1.0, eta_exc: float = 1.0) -> float:
    """Single-photon detection probability per attempt."""
    factors = {"eta_cc": eta_cc, "eta_trans": eta_trans, "eta_det": eta_det,
               "eta_pump": eta_pump, "eta_exc": eta_exc}
    for name, v in factors.items():
        if not 0 < v <= 1:
            raise ValueError(f"{name} must lie in (0, 1], got {v}")
    return math.prod(factors.values())


def efficiency_vs_aperture(optics_base: OpticalSystem, r_eff_list, temperatures,
                           trap: TrapGeometry | None = None, **kw) -> list[dict]:
    """eta_cc on an (R_eff, T) grid at fixed NA and mode waist.

    Rows are dicts with r_eff_mm, temperature_uK, eta_cc, convergence_estimate.
    """
    trap = trap or TrapGeometry()
    rows = []
    for t in temperatures:
        tr = replace(trap, atom_temperature=float(t))
        for r in r_eff_list:
            if r <= 0:
                rows.append({"r_eff_mm": 0.0, "temperature_uK": t * 1e6, "eta_cc": 0.0,
                             "convergence_estimate": 0.0})
                continue
            res = thermal_average(optics_base.with_aperture(float(r)), tr, **kw)
            rows.append({"r_eff_mm": r * 1e3, "temperature_uK": t * 1e6,
                         "eta_cc": res.eta_cc, "convergence_estimate": res.convergence_estimate})
    if not rows:
        warnings.warn("empty aperture sweep")
    return rows
