"""Estimators and fits for atom-photon correlation data.

Fits are weighted least squares (``scipy.optimize.least_squares``, trust
region with analytic Jacobians). The weights are recomputed from the model
at the current estimate until the parameters settle, so for Poisson and
binomial data the result solves the likelihood score equations. Reported
uncertainties come from ``(J^T W J)^-1`` without rescaling by chi^2.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares
from scipy.signal import lombscargle
from scipy.special import erfc, erfcx

__all__ = [
    "FitError",
    "FitResult",
    "Estimate",
    "TimeTagRecord",
    "ParityDataset",
    "ParityFit",
    "CorrelationSet",
    "DiagonalPopulations",
    "g2_zero",
    "g2_from_counts",
    "g2_from_timetags",
    "histogram_from_timetags",
    "emg_model",
    "fit_arrival_histogram",
    "fit_parity",
    "correlation_from_fit",
    "bell_fidelity",
    "fidelity_lower_bound",
    "ramsey_model",
    "fit_ramsey",
    "rabi_model",
    "fit_rabi",
    "two_photon_rabi",
    "rf_rabi_from_effective",
]


class FitError(RuntimeError):
    def __init__(self, message, residual_norm=float("nan")):
        super().__init__(f"{message} (residual norm {residual_norm:.4g})")
        self.residual_norm = residual_norm


@dataclass
class Estimate:
    value: float
    uncertainty: float

    def to_dict(self):
        return {"value": self.value, "uncertainty": self.uncertainty}


@dataclass
class FitResult:
    names: tuple
    values: np.ndarray
    covariance: np.ndarray
    chi2: float
    dof: int
    residual_norm: float
    nfev: int
    extra: dict = field(default_factory=dict)

    @property
    def errors(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.covariance), 0, None))

    def __getitem__(self, name):
        return float(self.values[self.names.index(name)])

    def error(self, name) -> float:
        return float(self.errors[self.names.index(name)])

    def to_dict(self) -> dict:
        return {
            "parameters": {n: float(v) for n, v in zip(self.names, self.values)},
            "uncertainties": {n: float(e) for n, e in zip(self.names, self.errors)},
            "chi2": self.chi2,
            "dof": self.dof,
            "residual_norm": self.residual_norm,
            **self.extra,
        }


def _weighted_fit(names, model, jac, p0, y, sigma_of, bounds=(-np.inf, np.inf),
                  rounds: int = 8, rtol: float = 1e-10) -> FitResult:
    """IRLS: least squares with sigma recomputed from the model between rounds."""
    p = np.asarray(p0, dtype=float)
    sigma = sigma_of(None)
    nfev = 0
    for it in range(rounds):
        s = sigma

        def resid(q, s=s):
            return (model(q) - y) / s

        def jacobian(q, s=s):
            return jac(q) / s[:, None]

        res = least_squares(resid, p, jac=jacobian, bounds=bounds, method="trf",
                            x_scale="jac", xtol=1e-14, ftol=1e-14, gtol=1e-14, max_nfev=2000)
        nfev += res.nfev
        if res.status <= 0 or not np.all(np.isfinite(res.x)):
            raise FitError("least squares did not converge", float(np.linalg.norm(res.fun)))
        moved = np.max(np.abs(res.x - p) / np.maximum(np.abs(res.x), 1e-300))
        p = res.x
        sigma = sigma_of(model(p))
        # the first round runs with data-based weights, so always reweight once
        if it > 0 and moved < rtol:
            break
    r = (model(p) - y) / sigma
    j = jac(p) / sigma[:, None]
    try:
        cov = np.linalg.inv(j.T @ j)
    except np.linalg.LinAlgError as exc:
        raise FitError("singular normal matrix", float(np.linalg.norm(r))) from exc
    chi2 = float(r @ r)
    return FitResult(tuple(names), p, cov, chi2, len(y) - len(p), math.sqrt(chi2), nfev)


def _binomial_sigma(shots):
    shots = np.asarray(shots, dtype=float)

    def sigma_of(pred):
        if pred is None:
            return np.full(shots.shape, 0.5) / np.sqrt(shots)
        pr = np.clip(pred, 0.0, 1.0)
        return np.sqrt(np.maximum(pr * (1 - pr), 0.5 / shots) / shots)

    return sigma_of


# -- g2 -------------------------------------------------------------------

def g2_zero(p1: float, p2: float, p12: float, n_attempts: int) -> Estimate:
    """g2(0) = p12 / (p1 p2) with binomial errors on each probability."""
    for name, v in (("p1", p1), ("p2", p2), ("p12", p12)):
        if not 0 <= v <= 1:
            raise ValueError(f"{name} must be a probability")
    if p1 <= 0 or p2 <= 0:
        raise ValueError("p1 and p2 must be positive")
    if n_attempts <= 0:
        raise ValueError("n_attempts must be positive")
    g = p12 / (p1 * p2)
    var = lambda p: p * (1 - p) / n_attempts  # noqa: E731
    err = math.sqrt(var(p12) / (p1 * p2) ** 2 + g * g * (var(p1) / p1 ** 2 + var(p2) / p2 ** 2))
    return Estimate(g, err)


def g2_from_counts(n1: int, n2: int, n12: int, n_attempts: int) -> Estimate:
    return g2_zero(n1 / n_attempts, n2 / n_attempts, n12 / n_attempts, n_attempts)


@dataclass(frozen=True)
class TimeTagRecord:
    trial_id: int
    detector_id: int
    timestamp: int  # ns

    def __post_init__(self):
        if self.detector_id not in (0, 1):
            raise ValueError("detector_id must be 0 or 1")
        if self.timestamp < 0:
            raise ValueError("timestamps must be non-negative")


def g2_from_timetags(records, n_attempts: int, window_ns=None) -> Estimate:
    """Heralded g2(0) from per-trial clicks on the two detectors of a beamsplitter."""
    d0, d1 = set(), set()
    for r in records:
        if window_ns is not None and not window_ns[0] <= r.timestamp < window_ns[1]:
            continue
        (d0 if r.detector_id == 0 else d1).add(r.trial_id)
    return g2_from_counts(len(d0), len(d1), len(d0 & d1), n_attempts)


def histogram_from_timetags(records, bin_ns: int = 1, t_range=None):
    """Arrival-time histogram; returns (bin centres in ns, counts)."""
    t = np.array([r.timestamp for r in records], dtype=float)
    if t.size == 0:
        raise ValueError("no records")
    lo, hi = t_range if t_range is not None else (t.min(), t.max() + bin_ns)
    edges = np.arange(lo, hi + bin_ns, bin_ns)
    counts, edges = np.histogram(t, edges)
    return 0.5 * (edges[1:] + edges[:-1]), counts


# -- arrival histogram --------------------------------------------------------

def emg_model(t, t0, tau, sigma, amplitude):
    """Gaussian(t0, sigma) convolved with exp(-t/tau)/tau, scaled to total ``amplitude``."""
    x = np.asarray(t, dtype=float) - t0
    z = (sigma / tau - x / sigma) / math.sqrt(2)
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        pos = erfcx(np.maximum(z, 0)) * np.exp(-0.5 * (x / sigma) ** 2)
        neg = np.exp(0.5 * (sigma / tau) ** 2 - x / tau) * erfc(np.minimum(z, 0))
    return amplitude / (2 * tau) * np.where(z > 0, pos, neg)


def _emg_jac(t, t0, tau, sigma, amplitude):
    x = np.asarray(t, dtype=float) - t0
    f = emg_model(t, t0, tau, sigma, amplitude)
    phi = amplitude * np.exp(-0.5 * (x / sigma) ** 2) / (math.sqrt(2 * math.pi) * sigma)
    d_t0 = (f - phi) / tau
    d_tau = f * (x / tau ** 2 - 1 / tau - sigma ** 2 / tau ** 3) + sigma ** 2 * phi / tau ** 3
    d_sigma = f * sigma / tau ** 2 - (sigma * phi / tau) * (1 / tau + x / sigma ** 2)
    d_amp = f / amplitude
    return np.column_stack([d_t0, d_tau, d_sigma, d_amp])


def fit_arrival_histogram(t_ns, counts, bin_width_ns: float | None = None,
                          min_sigma_ns: float = 1e-3) -> FitResult:
    """Fit counts per bin with ``bin_width * emg_model(t)``; parameters in ns.

    Returns parameters (t0, tau, sigma, amplitude); amplitude is the total
    number of events in the model.
    """
    t = np.asarray(t_ns, dtype=float)
    y = np.asarray(counts, dtype=float)
    if t.shape != y.shape or t.ndim != 1:
        raise ValueError("t_ns and counts must be 1D arrays of equal length")
    if np.count_nonzero(y) < 20:
        raise ValueError("need at least 20 non-empty bins")
    if np.any(y < 0):
        raise ValueError("counts must be non-negative")
    order = np.argsort(t)
    t, y = t[order], y[order]
    width = bin_width_ns or float(np.median(np.diff(t)))

    # starting point from the data: peak, rise and log-slope of the tail
    ipk = int(np.argmax(y))
    half = np.flatnonzero(y[:ipk + 1] < 0.5 * y[ipk])
    rise = t[ipk] - (t[half[-1]] if half.size else t[0])
    sigma0 = max(rise / 2.0, 2 * min_sigma_ns, width / 2)
    tail = (t > t[ipk] + 2 * sigma0) & (y > 0)
    if np.count_nonzero(tail) >= 3:
        slope = np.polyfit(t[tail], np.log(y[tail]), 1, w=np.sqrt(y[tail]))[0]
        tau0 = -1 / slope if slope < 0 else (t[-1] - t[0]) / 3
    else:
        tau0 = (t[-1] - t[0]) / 3
    p0 = [t[ipk] - sigma0, tau0, sigma0, y.sum()]

    model = lambda p: width * emg_model(t, *p)  # noqa: E731
    jac = lambda p: width * _emg_jac(t, *p)  # noqa: E731

    def sigma_of(pred):
        return np.sqrt(np.maximum(y if pred is None else pred, 1.0))

    bounds = ([-np.inf, 1e-6, min_sigma_ns, 0.0], [np.inf, np.inf, np.inf, np.inf])
    return _weighted_fit(("t0", "tau", "sigma", "amplitude"), model, jac, p0, y, sigma_of, bounds)


# -- parity --------------------------------------------------------------------

@dataclass
class ParityDataset:
    """Counts versus photon half-wave-plate angle (degrees)."""

    basis: str
    theta_deg: np.ndarray
    n_even: np.ndarray
    n_odd: np.ndarray
    n_total: np.ndarray

    def __post_init__(self):
        if self.basis not in ("X", "Y", "Z"):
            raise ValueError("basis must be X, Y or Z")
        self.theta_deg = np.asarray(self.theta_deg, dtype=float)
        self.n_even, self.n_odd, self.n_total = (np.asarray(a, dtype=float)
                                                 for a in (self.n_even, self.n_odd, self.n_total))
        n = self.theta_deg.size
        if not (self.n_even.size == self.n_odd.size == self.n_total.size == n):
            raise ValueError("column lengths differ")
        if np.any(self.n_even < 0) or np.any(self.n_odd < 0) or np.any(self.n_total <= 0):
            raise ValueError("counts must be non-negative and n_total positive")
        if np.any(self.n_even + self.n_odd > self.n_total):
            raise ValueError("n_even + n_odd exceeds n_total")

    @property
    def complementary(self) -> bool:
        return bool(np.all(self.n_even + self.n_odd == self.n_total))


def _sinusoid_design(theta_deg, period_deg):
    u = 2 * math.pi * np.asarray(theta_deg) / period_deg
    return np.column_stack([np.ones_like(u), np.cos(u), np.sin(u)])


@dataclass
class SinusoidFit:
    """P(theta) = a + c cos(u) + s sin(u) = a + b cos(u - phi), u = 2 pi theta / period."""

    fit: FitResult
    period_deg: float

    @property
    def a(self):
        return self.fit["a"]

    @property
    def b(self):
        return math.hypot(self.fit["c"], self.fit["s"])

    @property
    def phi(self):
        return math.atan2(self.fit["s"], self.fit["c"])

    @property
    def contrast(self) -> float:
        return 2 * self.b

    def __call__(self, theta_deg):
        return _sinusoid_design(np.atleast_1d(theta_deg), self.period_deg)[:, :3] @ self.fit.values[:3]

    def amplitude_phase(self) -> dict:
        c, s = self.fit["c"], self.fit["s"]
        cov = self.fit.covariance[1:3, 1:3]
        b = self.b
        if b == 0:
            return {"a": self.a, "b": 0.0, "phi": 0.0}
        gb = np.array([c, s]) / b
        gp = np.array([-s, c]) / b ** 2
        return {"a": self.a, "a_err": self.fit.error("a"), "b": b,
                "b_err": float(math.sqrt(gb @ cov @ gb)), "phi": self.phi,
                "phi_err": float(math.sqrt(gp @ cov @ gp))}


@dataclass
class ParityFit:
    basis: str
    even: SinusoidFit
    odd: SinusoidFit
    complementary: bool


def _fit_curve(theta, k, n, period, free_period):
    y = k / n
    sigma_of = _binomial_sigma(n)
    x = _sinusoid_design(theta, period)
    w = 1 / sigma_of(None) ** 2
    p0 = np.linalg.lstsq(x * np.sqrt(w)[:, None], y * np.sqrt(w), rcond=None)[0]
    if not free_period:
        model = lambda p: x @ p  # noqa: E731
        jac = lambda p: x  # noqa: E731
        return SinusoidFit(_weighted_fit(("a", "c", "s"), model, jac, p0, y, sigma_of), period)

    def model(p):
        return _sinusoid_design(theta, p[3]) @ p[:3]

    def jac(p):
        d = _sinusoid_design(theta, p[3])
        u = 2 * math.pi * theta / p[3]
        du = -u / p[3]
        dp = (-p[1] * np.sin(u) + p[2] * np.cos(u)) * du
        return np.column_stack([d, dp])

    res = _weighted_fit(("a", "c", "s", "period"), model, jac, [*p0, period], y, sigma_of,
                        ([-np.inf] * 3 + [1e-6], [np.inf] * 4))
    return SinusoidFit(res, res["period"])


def fit_parity(dataset: ParityDataset, free_period: bool = False,
               period_deg: float = 90.0) -> ParityFit:
    """Independent sinusoid fits to the even and odd outcome probabilities.

    The default period is 90 degrees of half-wave-plate angle (the plate
    rotates the polarization by twice its angle, and parity has a further
    factor of two).
    """
    theta = dataset.theta_deg
    n = np.unique(theta).size
    if n < 6:
        raise ValueError("need at least 6 distinct angles")
    span = (theta.max() - theta.min()) * n / (n - 1)
    if span < period_deg:
        raise ValueError(f"angles span {span:.1f} deg, less than one period ({period_deg} deg)")
    even = _fit_curve(theta, dataset.n_even, dataset.n_total, period_deg, free_period)
    odd = _fit_curve(theta, dataset.n_odd, dataset.n_total, period_deg, free_period)
    return ParityFit(dataset.basis, even, odd, dataset.complementary)


def correlation_from_fit(fit: ParityFit, theta_star: float | None = None) -> dict:
    """P_even - P_odd at theta_star (default: maximum of the fitted even curve).

    For complementary data (n_even + n_odd = n_total) the two fits are exact
    mirrors and the correlation is 2 P_even - 1. Otherwise the two fits are
    treated as independent; when theta_star is derived from the even fit its
    own uncertainty is propagated too.
    """
    ev, od = fit.even, fit.odd
    if ev.period_deg != od.period_deg and theta_star is None:
        warnings.warn("even and odd fits have different periods; using the even period")
    per = ev.period_deg
    derived = theta_star is None
    if derived:
        theta_star = (ev.phi * per / (2 * math.pi)) % per
    u = 2 * math.pi * theta_star / per
    g = np.array([1.0, math.cos(u), math.sin(u)])
    pe = float(g @ ev.fit.values[:3])
    ce = ev.fit.covariance[:3, :3]
    if fit.complementary:
        value = 2 * pe - 1
        err = 2 * math.sqrt(g @ ce @ g)
    else:
        uo = 2 * math.pi * theta_star / od.period_deg
        go = np.array([1.0, math.cos(uo), math.sin(uo)])
        po = float(go @ od.fit.values[:3])
        value = pe - po
        ge = g.copy()
        if derived and ev.b > 0:
            a, c, s = od.fit.values[:3]
            dpo = -c * math.sin(uo) + s * math.cos(uo)
            ce_, se_ = ev.fit["c"], ev.fit["s"]
            ge -= dpo * np.array([0.0, -se_, ce_]) / ev.b ** 2
        err = math.sqrt(ge @ ce @ ge + go @ od.fit.covariance[:3, :3] @ go)
    if not -1 <= value <= 1:
        warnings.warn(f"correlation {value:.4f} outside [-1, 1]; clipped")
        value = min(1.0, max(-1.0, value))
    return {"basis": fit.basis, "correlation": value, "uncertainty": err,
            "theta_star_deg": theta_star}


# -- fidelity --------------------------------------------------------------------

@dataclass(frozen=True)
class CorrelationSet:
    """<XX>, -<YY> (stored with the sign flip already applied) and <ZZ>."""

    xx: float
    minus_yy: float
    zz: float
    xx_err: float = 0.0
    minus_yy_err: float = 0.0
    zz_err: float = 0.0

    def __post_init__(self):
        for name in ("xx", "minus_yy", "zz"):
            if not -1 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} must lie in [-1, 1]")


def bell_fidelity(corr: CorrelationSet) -> Estimate:
    """Overlap with (|down,sigma+> + |up,sigma->)/sqrt(2): (1 + XX - YY + ZZ) / 4."""
    f = math.fsum([1.0, corr.xx, corr.minus_yy, corr.zz]) / 4
    err = math.sqrt(corr.xx_err ** 2 + corr.minus_yy_err ** 2 + corr.zz_err ** 2) / 4
    if not 0 <= f <= 1:
        warnings.warn(f"fidelity {f:.4f} outside [0, 1]; clipped")
        f = min(1.0, max(0.0, f))
    return Estimate(f, err)


@dataclass(frozen=True)
class DiagonalPopulations:
    """Diagonal density-matrix elements in one analysis basis, with errors."""

    p_down_H: float
    p_up_V: float
    p_down_V: float
    p_up_H: float
    errors: tuple = (0.0, 0.0, 0.0, 0.0)

    def values(self) -> np.ndarray:
        return np.array([self.p_down_H, self.p_up_V, self.p_down_V, self.p_up_H])


def _check_pops(p: DiagonalPopulations, tol):
    v = p.values()
    if np.any(v < 0):
        raise ValueError("populations must be non-negative")
    allowed = max(tol, 3 * math.sqrt(sum(e * e for e in p.errors)))
    if abs(v.sum() - 1) > allowed:
        raise ValueError(f"populations sum to {v.sum():.6f}, not 1")


def fidelity_lower_bound(z_pops: DiagonalPopulations, y_pops: DiagonalPopulations,
                         norm_tol: float = 1e-6) -> Estimate:
    """Fidelity bound from diagonal populations in two bases (no coherences needed)."""
    _check_pops(z_pops, norm_tol)
    _check_pops(y_pops, norm_tol)
    a, b, c, d = z_pops.values()
    ea, eb, ec, ed = z_pops.errors
    ya, yb, yc, yd = y_pops.values()
    cross = 2 * math.sqrt(c * d)
    value = 0.5 * (a + b - cross + ya + yb - yc - yd)
    # sqrt(c d) has a singular derivative at zero; fall back to its finite step there
    if c > 0 and d > 0:
        var_cross = (d / c) * ec ** 2 + (c / d) * ed ** 2
    elif c == 0 and d == 0:
        var_cross = 4 * ec * ed
    else:
        var_cross = 4 * max(c * ed, d * ec)
    var = ea ** 2 + eb ** 2 + var_cross + sum(e * e for e in y_pops.errors)
    return Estimate(value, 0.5 * math.sqrt(var))


# -- Ramsey / Rabi ---------------------------------------------------------------

def ramsey_model(t, t2_star, frequency, phase, amplitude, envelope="exponential"):
    t = np.asarray(t, dtype=float)
    x = t / t2_star
    env = np.exp(-x) if envelope == "exponential" else np.exp(-x * x)
    return 0.5 + amplitude * env * np.cos(2 * math.pi * frequency * t + phase)


def _dominant_frequency(t, y):
    """Frequency (Hz) of the strongest periodogram peak."""
    span = t.max() - t.min()
    dt = np.min(np.diff(np.unique(t)))
    f = np.linspace(0.25 / span, 0.5 / dt, max(200, int(40 * span / dt)))
    power = lombscargle(t, y - y.mean(), 2 * math.pi * f)
    return float(f[np.argmax(power)])


def _phase_guess(t, y, freq, offset):
    c = np.cos(2 * math.pi * freq * t)
    s = np.sin(2 * math.pi * freq * t)
    coef = np.linalg.lstsq(np.column_stack([c, s]), y - offset, rcond=None)[0]
    return math.atan2(-coef[1], coef[0]), float(math.hypot(*coef))


def _series_inputs(times, probabilities, shots, min_points):
    t = np.asarray(times, dtype=float)
    y = np.asarray(probabilities, dtype=float)
    if t.shape != y.shape or t.ndim != 1:
        raise ValueError("times and probabilities must be 1D arrays of equal length")
    if t.size < min_points:
        raise ValueError(f"need at least {min_points} points")
    if not (np.all(np.isfinite(t)) and np.all((y >= 0) & (y <= 1))):
        raise ValueError("times must be finite and probabilities lie in [0, 1]")
    n = np.broadcast_to(np.asarray(100 if shots is None else shots, dtype=float), t.shape)
    return t, y, np.array(n)


def fit_ramsey(times, probabilities, shots=None, envelope: str = "exponential") -> FitResult:
    """Fit 1/2 + A env(t) cos(2 pi f t + phi); times in s.

    The decay is fitted as a rate gamma = 1/T2* so that an undamped signal
    (gamma <= 0 or 1/gamma beyond the scan window) is handled: the result's
    ``extra`` then reports ``t2_star_lower_bound`` instead of a finite value.
    ``shots`` (per point) set binomial weights; default 100.
    """
    if envelope not in ("exponential", "gaussian"):
        raise ValueError("envelope must be 'exponential' or 'gaussian'")
    t, y, n = _series_inputs(times, probabilities, shots, 8)
    window = float(t.max() - t.min())
    f0 = _dominant_frequency(t, y)
    phi0, amp0 = _phase_guess(t, y, f0, 0.5)
    p0 = [1.0 / window, f0, phi0, max(amp0, 1e-3)]
    gauss = envelope == "gaussian"

    def model(p):
        g, f, ph, a = p
        x = g * t
        env = np.exp(-x * x) if gauss else np.exp(-x)
        return 0.5 + a * env * np.cos(2 * math.pi * f * t + ph)

    def jac(p):
        g, f, ph, a = p
        x = g * t
        env = np.exp(-x * x) if gauss else np.exp(-x)
        arg = 2 * math.pi * f * t + ph
        c, s = np.cos(arg), np.sin(arg)
        d_env = -2 * g * t * t * env if gauss else -t * env
        return np.column_stack([a * d_env * c, -a * env * s * 2 * math.pi * t,
                                -a * env * s, env * c])

    res = _weighted_fit(("gamma", "frequency", "phase", "amplitude"), model, jac, p0, y,
                        _binomial_sigma(n))
    g, ge = res["gamma"], res.error("gamma")
    if g <= 0 or 1 / g > window:
        res.extra.update(t2_star=float("inf") if g <= 0 else 1 / g, t2_star_err=float("nan"),
                         t2_star_lower_bound=max(window, 1 / (max(g, 0.0) + 2 * ge)),
                         envelope=envelope)
    else:
        res.extra.update(t2_star=1 / g, t2_star_err=ge / g ** 2, t2_star_lower_bound=None,
                         envelope=envelope)
    return res


def rabi_model(t, omega, amplitude, offset):
    return offset - amplitude * np.cos(omega * np.asarray(t, dtype=float))


def fit_rabi(times, probabilities, shots=None) -> FitResult:
    """Fit offset - amplitude cos(omega t); omega in rad/s, times in s."""
    t, y, n = _series_inputs(times, probabilities, shots, 8)
    f0 = _dominant_frequency(t, y)
    if (t.max() - t.min()) * f0 < 1.0:
        raise ValueError("data cover less than one Rabi period")
    off0 = float(y.mean())
    p0 = [2 * math.pi * f0, max(0.5 * (y.max() - y.min()), 1e-3), off0]

    def model(p):
        return rabi_model(t, *p)

    def jac(p):
        w, a, _ = p
        return np.column_stack([a * t * np.sin(w * t), -np.cos(w * t), np.ones_like(t)])

    return _weighted_fit(("omega", "amplitude", "offset"), model, jac, p0, y, _binomial_sigma(n))


def two_photon_rabi(omega_mw: float, omega_rf: float, detuning: float) -> float:
    """Effective two-photon Rabi frequency omega_mw * omega_rf / (2 detuning)."""
    if detuning == 0:
        raise ValueError("detuning must be nonzero")
    return omega_mw * omega_rf / (2 * detuning)


def rf_rabi_from_effective(omega_eff: float, omega_mw: float, detuning: float) -> float:
    """Invert :func:`two_photon_rabi` for the rf Rabi frequency."""
    if omega_mw == 0:
        raise ValueError("omega_mw must be nonzero")
    return 2 * detuning * omega_eff / omega_mw
