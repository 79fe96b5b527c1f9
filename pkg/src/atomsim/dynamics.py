"""Lindblad dynamics of a :class:`~atomsim.atomic.LevelScheme` under a Gaussian pulse.

Everything is in the frame rotating at the laser frequency, with hbar divided
out: Hamiltonian entries are angular frequencies (rad/s).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .atomic import LevelScheme
from .integrate import IntegrationError, dopri5

__all__ = [
    "PulseProfile",
    "JumpOperator",
    "Trajectory",
    "IntegrationError",
    "hamiltonian_at",
    "lindblad_rhs",
    "jump_operators",
    "evolve",
    "calibrate_pi_pulse",
    "driven_coupling",
    "pure_state",
    "check_density_matrix",
]

SQRT_2PI = math.sqrt(2 * math.pi)


@dataclass(frozen=True)
class PulseProfile:
    """Gaussian Rabi envelope, switched on only inside [t_start, t_end]."""

    omega_peak: float
    center: float
    width: float
    q: int = 0
    t_start: float = -math.inf
    t_end: float = math.inf

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError("pulse width must be positive")
        if not self.t_start < self.center < self.t_end:
            raise ValueError("need t_start < center < t_end")
        if self.q not in (-1, 0, 1):
            raise ValueError("polarization q must be -1, 0 or +1")

    def envelope(self, t: float) -> float:
        if t < self.t_start or t > self.t_end:
            return 0.0
        x = (t - self.center) / self.width
        return self.omega_peak * math.exp(-0.5 * x * x)

    def area(self) -> float:
        """Area of the untruncated envelope."""
        return self.omega_peak * self.width * SQRT_2PI

    @classmethod
    def centered(cls, omega_peak, width, q=0, half_window=8.0):
        """Pulse on [0, 2*half_window*width] centred in its window."""
        return cls(omega_peak, half_window * width, width, q, 0.0, 2 * half_window * width)


@dataclass(frozen=True)
class JumpOperator:
    rate: float
    source: int  # excited level
    target: int  # ground level

    def matrix(self, dim: int) -> np.ndarray:
        m = np.zeros((dim, dim))
        m[self.target, self.source] = math.sqrt(self.rate)
        return m


def jump_operators(scheme: LevelScheme) -> list[JumpOperator]:
    return [JumpOperator(r, e, g) for e, g, r in scheme.decay_channels]


def hamiltonian_at(scheme: LevelScheme, pulse: PulseProfile, t: float) -> np.ndarray:
    h = np.diag(scheme.energies).astype(complex)
    omega = pulse.envelope(t)
    if omega:
        h += 0.5 * omega * scheme.coupling_matrix(pulse.q)
    return h


def _generator(scheme: LevelScheme, pulse: PulseProfile):
    """Return a closure computing d(rho)/dt; vectorised for speed."""
    e = scheme.energies
    g = scheme.total_decay
    m = -1j * (e[:, None] - e[None, :]) - 0.5 * (g[:, None] + g[None, :])
    a = scheme.rate_matrix
    v = scheme.coupling_matrix(pulse.q)
    diag = np.diag_indices(scheme.dim)

    def rhs(t, rho):
        out = m * rho
        omega = pulse.envelope(t)
        if omega:
            x = v @ rho
            out += (-0.5j * omega) * (x - x.conj().T)
        out[diag] += a @ rho[diag].real
        return out

    return rhs


def lindblad_rhs(scheme: LevelScheme, pulse: PulseProfile, rho, t: float) -> np.ndarray:
    """Lindblad generator applied to ``rho``; decay into the sink keeps the trace."""
    rho = np.asarray(rho)
    if rho.shape != (scheme.dim, scheme.dim):
        raise ValueError(f"rho has shape {rho.shape}, scheme has dimension {scheme.dim}")
    return _generator(scheme, pulse)(t, rho.astype(complex))


def pure_state(dim: int, index: int) -> np.ndarray:
    rho = np.zeros((dim, dim), dtype=complex)
    rho[index, index] = 1.0
    return rho


def check_density_matrix(rho, trace_tol=1e-8, herm_tol=1e-10, eig_tol=1e-8) -> dict:
    """Return invariant diagnostics; raise ValueError if any is violated."""
    rho = np.asarray(rho)
    herm = float(np.max(np.abs(rho - rho.conj().T)))
    drift = abs(float(np.trace(rho).real) - 1.0)
    eig = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min())
    diag = {"trace_drift": drift, "hermiticity": herm, "min_eigenvalue": eig}
    if drift > trace_tol or herm > herm_tol or eig < -eig_tol:
        raise ValueError(f"not a valid density matrix: {diag}")
    return diag


@dataclass
class Trajectory:
    """Result of :func:`evolve`.

    ``times``/``population_history`` hold every accepted step;
    ``sample_times``/``states`` hold full density matrices at requested times.
    ``decay_flux[i]`` is the cumulative population that decayed out of level i.
    """

    labels: list
    times: np.ndarray
    population_history: np.ndarray
    sample_times: np.ndarray
    states: list
    decay_flux: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def populations(self, level, t=None) -> float | np.ndarray:
        """Population of ``level`` (index or label) at time t, or its history."""
        i = self.labels.index(level) if isinstance(level, str) else level
        if t is None:
            return self.population_history[:, i]
        return float(np.interp(t, self.times, self.population_history[:, i]))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["time_s", *self.labels, "trace"])
            for t, p in zip(self.times, self.population_history):
                w.writerow([repr(float(t)), *(repr(float(x)) for x in p), repr(float(p.sum()))])


def evolve(scheme: LevelScheme, pulse: PulseProfile, rho0, t0: float, t1: float,
           rtol: float = 1e-8, atol: float = 1e-10, sample_times=None,
           abort_tol: float = 1e-6) -> Trajectory:
    """Integrate the master equation from t0 to t1.

    The state is re-symmetrised after every accepted step. The integration
    aborts (:class:`IntegrationError`) if the trace drifts or the raw state
    loses Hermiticity by more than ``abort_tol``.
    """
    n = scheme.dim
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (n, n):
        raise ValueError(f"rho0 has shape {rho0.shape}, scheme has dimension {n}")
    check_density_matrix(rho0, trace_tol=abort_tol, herm_tol=abort_tol, eig_tol=abort_tol)
    if not t1 > t0:
        raise ValueError("need t1 > t0")

    rhs_rho = _generator(scheme, pulse)
    gamma = scheme.total_decay
    nn = n * n
    diag_flat = np.arange(n) * (n + 1)

    def fun(t, y):
        rho = y[:nn].reshape(n, n)
        out = np.empty_like(y)
        out[:nn] = rhs_rho(t, rho).ravel()
        out[nn:] = gamma * y[diag_flat].real
        return out

    times = [t0]
    pops = [rho0.diagonal().real.copy()]
    worst = {"trace_drift": 0.0, "raw_hermiticity": 0.0, "hermiticity": 0.0}

    def project(y):
        rho = y[:nn].reshape(n, n)
        raw = float(np.max(np.abs(rho - rho.conj().T)))
        rho = 0.5 * (rho + rho.conj().T)
        y = y.copy()
        y[:nn] = rho.ravel()
        y[nn:] = y[nn:].real
        worst["raw_hermiticity"] = max(worst["raw_hermiticity"], raw)
        if raw > abort_tol:
            raise IntegrationError(f"Hermiticity lost ({raw:.3g})")
        return y

    def on_step(t, y):
        p = y[diag_flat].real
        drift = abs(p.sum() - 1.0)
        worst["trace_drift"] = max(worst["trace_drift"], drift)
        if drift > abort_tol:
            raise IntegrationError(f"trace drift {drift:.3g} at t={t:.6g}")
        times.append(t)
        pops.append(p.copy())

    samples = sorted(set([float(t0), float(t1)] + [float(s) for s in (() if sample_times is None else sample_times)
                                                    if t0 <= s <= t1]))
    y = np.concatenate([rho0.ravel(), np.zeros(n, dtype=complex)])
    states = [rho0.copy()]
    totals = {"accepted": 0, "rejected": 0, "nfev": 0}
    min_eig = float(np.linalg.eigvalsh(rho0).min())
    h = None
    for a, b in zip(samples[:-1], samples[1:]):
        y, st = dopri5(fun, a, y, b, rtol=rtol, atol=atol, h0=h, project=project,
                       on_step=on_step)
        for key in totals:
            totals[key] += st[key]
        rho = y[:nn].reshape(n, n).copy()
        states.append(rho)
        min_eig = min(min_eig, float(np.linalg.eigvalsh(rho).min()))

    diagnostics = dict(worst, min_eigenvalue=min_eig, **totals)
    diagnostics["hermiticity"] = max(float(np.max(np.abs(s - s.conj().T))) for s in states)
    return Trajectory(
        labels=scheme.labels,
        times=np.array(times),
        population_history=np.array(pops),
        sample_times=np.array(samples),
        states=states,
        decay_flux=y[nn:].real.copy(),
        diagnostics=diagnostics,
    )


def driven_coupling(scheme: LevelScheme, q: int = 0) -> float:
    """CG factor of the driven |f=3,0> -> |f'=2,0> transition for polarization q."""
    return float(scheme.coupling_matrix(q)[scheme.driven, scheme.initial])


def calibrate_pi_pulse(scheme: LevelScheme, width_sigma: float, q: int = 0) -> float:
    """Peak Rabi frequency (stretched-transition convention) giving a pi pulse.

    The area is defined on the driven transition including its CG factor:
    ``omega_peak * |C| * width * sqrt(2 pi) = pi``. Multiply the result by
    ``|driven_coupling(scheme, q)|`` to get the driven transition's own peak
    Rabi frequency.
    """
    if not width_sigma > 0:
        raise ValueError("width_sigma must be positive")
    c = driven_coupling(scheme, q)
    if c == 0.0:
        raise ValueError(f"polarization q={q} does not couple |3,0> to |2',0>")
    return math.pi / (abs(c) * width_sigma * SQRT_2PI)
