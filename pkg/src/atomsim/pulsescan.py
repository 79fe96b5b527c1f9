"""Leakage and double-excitation error versus excitation-pulse duration.

Bookkeeping uses the flagged 41-level scheme (see
:func:`atomsim.atomic.build_level_scheme`): any population found in, or
decayed out of, the flagged f'=2 copy went through a second excitation.

Error channels at the end of the pulse:

* leakage -- sink population plus the f=4 share of the residual f'=3, f'=4
  population (its asymptotic value after free decay);
* double excitation -- flagged-excited population at pulse end plus the
  cumulative decay flux out of the flagged-excited levels;
* Bell channel -- population that decayed into f=3 and was not re-excited;
* never excited -- population left in the unflagged ground manifold.

The four sum to one. Residual excited population is projected onto the
ground levels with the exact per-channel branching instead of integrating
the free decay.
"""
from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .atomic import LevelScheme, Manifold, SchemeConfig, build_level_scheme
from .dynamics import PulseProfile, calibrate_pi_pulse, evolve, pure_state
from .integrate import IntegrationError

__all__ = [
    "ScanConfig",
    "ScanPoint",
    "ScanError",
    "FWHM_PER_SIGMA",
    "build_flagged_scheme",
    "pulse_for_duration",
    "simulate_duration",
    "leakage_error",
    "double_excitation_error",
    "final_populations",
    "scan_pulse_duration",
    "default_grid",
    "optimum",
    "write_scan_csv",
]

FWHM_PER_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))


class ScanError(RuntimeError):
    def __init__(self, t_pi, cause):
        super().__init__(f"evolution failed at t_pi={t_pi * 1e9:.4g} ns: {cause}")
        self.t_pi = t_pi


@dataclass(frozen=True)
class ScanConfig:
    """How a pulse duration t_pi becomes a Gaussian pulse.

    ``convention="window"``: the pulse occupies [0, t_pi], centred, with
    sigma = t_pi / sigmas_per_duration (default 7, edges at 0.2 % of peak).
    ``convention="fwhm"``: t_pi is the FWHM of the Rabi envelope and the
    pulse is truncated at centre +- truncation_sigmas * sigma.
    ``drive_scale`` multiplies the calibrated pi-pulse amplitude.
    """

    scheme: SchemeConfig = field(default_factory=SchemeConfig)
    convention: str = "window"
    sigmas_per_duration: float = 7.0
    truncation_sigmas: float = 8.0
    q: int = 0
    drive_scale: float = 1.0
    rtol: float = 1e-8
    atol: float = 1e-10

    def __post_init__(self):
        if self.convention not in ("window", "fwhm"):
            raise ValueError(f"unknown duration convention {self.convention!r}")
        if self.sigmas_per_duration <= 0 or self.truncation_sigmas <= 0:
            raise ValueError("duration mapping factors must be positive")

    def sigma(self, t_pi: float) -> float:
        if self.convention == "fwhm":
            return t_pi / FWHM_PER_SIGMA
        return t_pi / self.sigmas_per_duration

    @classmethod
    def from_dict(cls, d: dict, scheme: SchemeConfig | None = None) -> "ScanConfig":
        keys = ("convention", "sigmas_per_duration", "truncation_sigmas", "q",
                "drive_scale", "rtol", "atol")
        kw = {k: d[k] for k in keys if k in d}
        return cls(scheme=scheme or SchemeConfig(), **kw)

    def to_dict(self) -> dict:
        return {
            "convention": self.convention,
            "sigmas_per_duration": self.sigmas_per_duration,
            "truncation_sigmas": self.truncation_sigmas,
            "q": self.q,
            "drive_scale": self.drive_scale,
            "rtol": self.rtol,
            "atol": self.atol,
        }


@dataclass
class ScanPoint:
    t_pi: float
    leakage_error: float
    double_excitation_error: float
    never_excited: float
    bell_channel: float
    final_populations: dict
    sigma: float = float("nan")
    omega_peak: float = float("nan")
    diagnostics: dict = field(default_factory=dict)

    @property
    def total_error(self) -> float:
        return self.leakage_error + self.double_excitation_error


def build_flagged_scheme(config: SchemeConfig | None = None) -> LevelScheme:
    return build_level_scheme(replace(config or SchemeConfig(), flagged=True))


def pulse_for_duration(t_pi: float, scheme: LevelScheme, config: ScanConfig) -> PulseProfile:
    if not t_pi > 0:
        raise ValueError("t_pi must be positive")
    sigma = config.sigma(t_pi)
    omega = config.drive_scale * calibrate_pi_pulse(scheme, sigma, config.q)
    if config.convention == "fwhm":
        half = config.truncation_sigmas * sigma
        return PulseProfile(omega, half, sigma, config.q, 0.0, 2 * half)
    return PulseProfile(omega, 0.5 * t_pi, sigma, config.q, 0.0, t_pi)


def _asymptotic_populations(scheme: LevelScheme, pops: np.ndarray) -> np.ndarray:
    exc = np.zeros(scheme.dim, dtype=bool)
    exc[scheme.excited_indices] = True
    out = np.where(exc, 0.0, pops)
    return out + scheme.branching_to_ground() @ np.where(exc, pops, 0.0)


def simulate_duration(t_pi: float, config: ScanConfig | None = None,
                      scheme: LevelScheme | None = None) -> ScanPoint:
    """Run one pulse of duration ``t_pi`` (s) and decompose the outcome."""
    config = config or ScanConfig()
    scheme = scheme or build_flagged_scheme(config.scheme)
    pulse = pulse_for_duration(t_pi, scheme, config)
    rho0 = pure_state(scheme.dim, scheme.initial)
    try:
        traj = evolve(scheme, pulse, rho0, pulse.t_start, pulse.t_end,
                      rtol=config.rtol, atol=config.atol, sample_times=[pulse.center])
    except IntegrationError as exc:
        raise ScanError(t_pi, exc) from exc

    pops = traj.final.diagonal().real
    final = _asymptotic_populations(scheme, pops)
    sink = scheme.index("sink")
    flag_exc = scheme.indices(Manifold.EXCITED_F2, flagged=True)
    plain_ground = scheme.indices(Manifold.GROUND_F3, flagged=False)

    leakage = float(final[sink])
    # every unit of flux out of a flagged excited level is one re-excitation
    double = float(traj.decay_flux[flag_exc].sum() + pops[flag_exc].sum())
    never = float(final[plain_ground].sum())
    bell = 1.0 - never - leakage - double
    return ScanPoint(
        t_pi=float(t_pi),
        leakage_error=leakage,
        double_excitation_error=double,
        never_excited=never,
        bell_channel=bell,
        final_populations={lab: float(final[i]) for i, lab in enumerate(scheme.labels)
                           if not scheme.levels[i].excited},
        sigma=pulse.width,
        omega_peak=pulse.omega_peak,
        diagnostics=traj.diagnostics,
    )


def leakage_error(t_pi: float, config: ScanConfig | None = None) -> float:
    return simulate_duration(t_pi, config).leakage_error


def double_excitation_error(t_pi: float, config: ScanConfig | None = None) -> float:
    return simulate_duration(t_pi, config).double_excitation_error


def final_populations(t_pi: float, config: ScanConfig | None = None) -> dict:
    """Asymptotic ground-state populations (label -> probability) after the pulse."""
    return simulate_duration(t_pi, config).final_populations


def _worker_count(workers):
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get("ATOMSIM_THREADS")
    return max(1, int(env)) if env else 1


def scan_pulse_duration(t_pi_list, config: ScanConfig | None = None,
                        workers: int | None = None) -> list[ScanPoint]:
    """One :class:`ScanPoint` per duration, ordered by t_pi.

    The pulse is re-calibrated to a pi area at every point. ``workers``
    (default: ``$ATOMSIM_THREADS`` or 1) evaluates points in parallel processes.
    """
    ts = sorted(float(t) for t in t_pi_list)
    if not ts:
        raise ValueError("empty duration list")
    if any(t <= 0 for t in ts):
        raise ValueError("durations must be positive")
    config = config or ScanConfig()
    n = _worker_count(workers)
    if n == 1 or len(ts) == 1:
        scheme = build_flagged_scheme(config.scheme)
        return [simulate_duration(t, config, scheme) for t in ts]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(simulate_duration, ts, [config] * len(ts)))


def default_grid(n: int = 30, lo: float = 2e-9, hi: float = 60e-9) -> np.ndarray:
    return np.linspace(lo, hi, n)


def optimum(points: list[ScanPoint]) -> ScanPoint:
    return min(points, key=lambda p: p.total_error)


def write_scan_csv(points: list[ScanPoint], path) -> None:
    labels = list(points[0].final_populations)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t_pi_ns", "leakage", "double_excitation", "total", *labels])
        for p in points:
            w.writerow([f"{p.t_pi * 1e9:.6g}", repr(p.leakage_error),
                        repr(p.double_excitation_error), repr(p.total_error),
                        *(repr(p.final_populations[k]) for k in labels)])
