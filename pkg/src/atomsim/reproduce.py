"""Golden-number checks: a registry of named computations and their pass bands.

Each check computes one scalar (or verdict string). ``data/golden.json``
holds, per check name, either ``{"target": x, "tolerance": t}``,
``{"lo": a, "hi": b}``, ``{"max": b}``, ``{"min": a}`` or ``{"equals": v}``.
"""
from __future__ import annotations

import json
from pathlib import Path
import math
import time
import warnings
from dataclasses import dataclass

import numpy as np

from . import analysis, budget, collection, montecarlo, pulsescan
from .config import RunConfig, data_path
from .dynamics import PulseProfile, evolve, pure_state

__all__ = ["Check", "CHECKS", "load_golden", "judge", "run_checks", "synthetic"]


@dataclass(frozen=True)
class Check:
    name: str
    criterion: int | None  # acceptance criterion number, None for supplementary checks
    description: str
    func: object


CHECKS: dict[str, Check] = {}


def check(name, criterion, description):
    def deco(f):
        CHECKS[name] = Check(name, criterion, description, f)
        return f
    return deco


def load_golden(path=None) -> dict:
    text = data_path("golden.json").read_text() if path is None else Path(path).read_text()
    return json.loads(text)


def judge(value, entry) -> bool:
    """True when ``value`` satisfies the golden ``entry``; KeyError/TypeError if malformed."""
    if not isinstance(entry, dict) or not entry:
        raise TypeError("golden entry must be a non-empty object")
    if "equals" in entry:
        return value == entry["equals"]
    v = float(value)
    if not math.isfinite(v):
        return False
    if "target" in entry:
        return abs(v - float(entry["target"])) <= float(entry["tolerance"])
    if "lo" in entry or "hi" in entry:
        return float(entry["lo"]) <= v <= float(entry["hi"])
    if "max" in entry:
        return v <= float(entry["max"])
    if "min" in entry:
        return v >= float(entry["min"])
    raise KeyError(f"unrecognised golden entry {sorted(entry)}")


class _Context:
    """Lazily computed shared results (the scan and the thermal average)."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self._cache = {}

    def get(self, key, fn):
        if key not in self._cache:
            self._cache[key] = fn()
        return self._cache[key]

    def scan(self):
        return self.get("scan", lambda: pulsescan.scan_pulse_duration(self.cfg.grid_ns * 1e-9,
                                                                     self.cfg.scan))

    def point(self, t_ns):
        return self.get(("point", t_ns), lambda: pulsescan.simulate_duration(t_ns * 1e-9,
                                                                            self.cfg.scan))

    def thermal(self, order=None):
        th = self.cfg.thermal
        order = order or int(th["order"])
        return self.get(("thermal", order), lambda: collection.thermal_average(
            self.cfg.optics, self.cfg.trap, order=order, method=th["method"],
            n_samples=int(th["n_samples"]), seed=self.cfg.seeds[0], n_grid=int(th["n_grid"])))

    def mc(self):
        mc = self.cfg.monte_carlo
        return self.get("mc", lambda: [
            (montecarlo.mc_decomposition(t * 1e-9, int(mc["n_trajectories"]), self.cfg.seeds[0],
                                         self.cfg.scan, int(mc["n_steps"])),
             self.point(float(t)))
            for t in mc["t_pi_ns"]])


# -- pulse scan -------------------------------------------------------------------

@check("scan_optimum_ns", 1, "argmin of total error over the default grid (ns)")
def _(ctx):
    return pulsescan.optimum(ctx.scan()).t_pi * 1e9


@check("total_error_12ns", 2, "leakage + double excitation at t_pi = 12 ns")
def _(ctx):
    return ctx.point(12.0).total_error


@check("total_error_30ns", 2, "leakage + double excitation at t_pi = 30 ns")
def _(ctx):
    return ctx.point(30.0).total_error


@check("leakage_12ns", 2, "sink population at 12 ns (self-consistent golden value)")
def _(ctx):
    return ctx.point(12.0).leakage_error


@check("mc_max_abs_z", 3, "largest |z| between trajectory oracle and master equation")
def _(ctx):
    z = []
    for est, pt in ctx.mc():
        z.append((est.leakage_error - pt.leakage_error) / est.leakage_se)
        z.append((est.double_excitation_error - pt.double_excitation_error)
                 / est.double_excitation_se)
    return float(np.max(np.abs(z)))


@check("scan_trace_drift", 4, "worst trace drift over the default scan")
def _(ctx):
    return max(p.diagnostics["trace_drift"] for p in ctx.scan())


@check("scan_hermiticity", 4, "worst Hermiticity defect over the default scan")
def _(ctx):
    return max(p.diagnostics["hermiticity"] for p in ctx.scan())


@check("scan_min_eigenvalue", 4, "lowest density-matrix eigenvalue over the default scan")
def _(ctx):
    return min(p.diagnostics["min_eigenvalue"] for p in ctx.scan())


def drive_free_decay_error(cfg: RunConfig, t_end=100e-9, n_samples=11) -> float:
    """Largest relative deviation of an undriven excited population from exp(-Gamma t)."""
    scheme = pulsescan.build_flagged_scheme(cfg.scheme)
    i = scheme.index("fp2_m+0")
    pulse = PulseProfile(0.0, 0.5 * t_end, t_end, 0, 0.0, t_end)
    ts = np.linspace(0, t_end, n_samples)
    traj = evolve(scheme, pulse, pure_state(scheme.dim, i), 0.0, t_end,
                  rtol=cfg.scan.rtol, atol=cfg.scan.atol, sample_times=ts[1:-1])
    got = np.array([s[i, i].real for s in traj.states])
    want = np.exp(-scheme.total_decay[i] * traj.sample_times)
    return float(np.max(np.abs(got / want - 1)))


@check("drive_free_decay_rel", 4, "undriven f'=2 population vs exp(-Gamma t), relative")
def _(ctx):
    return drive_free_decay_error(ctx.cfg)


# -- collection -------------------------------------------------------------------

def _analytic_vs_quadrature(p):
    na = 0.55
    return abs(collection.collection_efficiency_analytic(na, p)
               - collection.collection_efficiency_quadrature(na, p))


@check("eta_sigma_na055", 5, "analytic sigma-dipole collection fraction at NA = 0.55")
def _(ctx):
    return collection.collection_efficiency_analytic(0.55, "sigma+")


@check("eta_pi_na055", 5, "analytic pi-dipole collection fraction at NA = 0.55")
def _(ctx):
    return collection.collection_efficiency_analytic(0.55, "pi")


@check("eta_sigma_analytic_vs_quadrature", 5, "|analytic - cone quadrature|, sigma dipole")
def _(ctx):
    return _analytic_vs_quadrature("sigma+")


@check("eta_pi_analytic_vs_quadrature", 5, "|analytic - cone quadrature|, pi dipole")
def _(ctx):
    return _analytic_vs_quadrature("pi")


@check("eta_full_hemisphere", 5, "max |eta(NA=1) - 1/2| over dipole orientations")
def _(ctx):
    return max(abs(collection.collection_efficiency_analytic(1.0, p) - 0.5)
               for p in ("sigma+", "sigma-", "pi"))


@check("eta_cc", 6, "thermally averaged, branching-weighted collection x coupling")
def _(ctx):
    return ctx.thermal().eta_cc


@check("eta_cc_convergence_bound", 6,
       "doubled-order change divided by the reported convergence estimate")
def _(ctx):
    low = ctx.thermal()
    high = ctx.thermal(2 * low.order)
    return abs(high.eta_cc - low.eta_cc) / low.convergence_estimate


@check("success_probability", 7, "P_s from eta_cc and the loss chain")
def _(ctx):
    losses = ctx.cfg.losses or {}
    return collection.success_probability(ctx.thermal().eta_cc, **losses)


# -- estimators -------------------------------------------------------------------

MEASURED_CORRELATIONS = (0.909, 0.919, 0.939)


@check("bell_fidelity", 8, "F from (XX, -YY, ZZ) = (0.909, 0.919, 0.939)")
def _(ctx):
    return analysis.bell_fidelity(analysis.CorrelationSet(*MEASURED_CORRELATIONS)).value


@check("bell_fidelity_limits", 8, "max deviation of ideal (1) and mixed (1/4) cases")
def _(ctx):
    ideal = analysis.bell_fidelity(analysis.CorrelationSet(1, 1, 1)).value
    mixed = analysis.bell_fidelity(analysis.CorrelationSet(0, 0, 0)).value
    return max(abs(ideal - 1), abs(mixed - 0.25))


def synthetic_populations(target=0.931):
    """Z and Y populations whose lower bound equals ``target``.

    Z basis: 4 % spread evenly on the wrong-correlation terms. Y basis:
    correlated share chosen so the bound lands on the target.
    """
    z = analysis.DiagonalPopulations(0.48, 0.48, 0.02, 0.02, (0.01,) * 4)
    z_part = 0.96 - 2 * math.sqrt(0.02 * 0.02)
    good = (2 * target - z_part + 1) / 2
    y = analysis.DiagonalPopulations(good / 2, good / 2, (1 - good) / 2, (1 - good) / 2,
                                     (0.01,) * 4)
    return z, y


@check("lower_bound_synthetic", 9, "lower bound from populations built for F_low = 0.931")
def _(ctx):
    return analysis.fidelity_lower_bound(*synthetic_populations()).value


@check("lower_bound_limits", 9, "max deviation of ideal (1) and mixed (0) populations")
def _(ctx):
    ideal = analysis.DiagonalPopulations(0.5, 0.5, 0.0, 0.0)
    mixed = analysis.DiagonalPopulations(0.25, 0.25, 0.25, 0.25)
    a = analysis.fidelity_lower_bound(ideal, ideal).value
    b = analysis.fidelity_lower_bound(mixed, mixed).value
    return max(abs(a - 1), abs(b))


@check("coherence_factor", 10, "C for (7 us, 130 us, 125 us, 14 ms)")
def _(ctx):
    return budget.coherence_factor(ctx.cfg.coherence).value


@check("dephasing_error", 10, "(1 - C) / 2")
def _(ctx):
    return budget.dephasing_error(ctx.cfg.coherence).value


def _inferred(ctx):
    f = ctx.cfg.fidelity
    return budget.inferred_fidelity(f["measured"], f["measured_err"], f["epsilon_state"],
                                    f["epsilon_state_err"])


@check("inferred_fidelity", 11, "F + epsilon_state")
def _(ctx):
    return _inferred(ctx).value


@check("inferred_fidelity_uncertainty", 11, "quadrature uncertainty of the inferred fidelity")
def _(ctx):
    return _inferred(ctx).uncertainty


# g2(0) = 0.096(66): two coincidences in 1e6 attempts with 4564 clicks per detector
G2_COUNTS = (4564, 4564, 2, 1_000_000)


@check("g2_zero", None, "g2(0) from synthesized count triples")
def _(ctx):
    return analysis.g2_from_counts(*G2_COUNTS).value


@check("g2_zero_uncertainty", None, "binomial uncertainty of g2(0)")
def _(ctx):
    return analysis.g2_from_counts(*G2_COUNTS).uncertainty


@check("rf_rabi_khz", None, "rf Rabi frequency from 2.497 kHz effective, 13.5 kHz mw, 125 kHz detuning")
def _(ctx):
    return analysis.rf_rabi_from_effective(2.497, 13.5, 125.0)


def _report(ctx):
    f = ctx.cfg.fidelity
    entries = budget.load_entries(data_path("budget_entries.json"))
    return budget.compose_budget(entries, f["measured"], f["measured_err"])


@check("budget_central_total", None, "sum of modeled and measured budget rows")
def _(ctx):
    return _report(ctx).central


@check("budget_bound_total", None, "sum of bounded budget rows")
def _(ctx):
    return _report(ctx).bound_total


@check("budget_verdict", None, "budget consistency with the measured fidelity")
def _(ctx):
    return _report(ctx).to_dict()["verdict"]


# -- fit round trips --------------------------------------------------------------

def synthetic(kind: str, rng: np.random.Generator):
    """One synthetic dataset at the statistics used for round-trip checks.

    Returns (fit callable, data tuple, truth dict) with truth keyed by fit
    parameter name.
    """
    if kind == "histogram":
        t = rng.normal(10.0, 2.0, 10_000) + rng.exponential(30.4, 10_000)
        counts, edges = np.histogram(t, np.arange(0.0, 201.0))
        return (analysis.fit_arrival_histogram, (0.5 * (edges[1:] + edges[:-1]), counts),
                {"tau": 30.4, "sigma": 2.0, "t0": 10.0})
    if kind == "parity":
        theta = np.arange(0, 181, 15.0)
        n = np.full(theta.size, 100)
        pe = 0.5 + 0.47 * np.cos(np.radians(4 * theta) - 0.3)
        even = rng.binomial(n, pe)
        ds = analysis.ParityDataset("X", theta, even, n - even, n)

        def fit(d):
            return analysis.correlation_from_fit(analysis.fit_parity(d))
        return fit, (ds,), {"correlation": 0.94}
    if kind.startswith("ramsey"):
        t2, f, span = {"ramsey_130us": (130e-6, 20e3, 300e-6),
                       "ramsey_14ms": (14e-3, 300.0, 25e-3)}[kind]
        t = np.linspace(0, span, 41)
        p = analysis.ramsey_model(t, t2, f, 0.4, 0.45)
        k = rng.binomial(100, np.clip(p, 0, 1))
        return (lambda *a: analysis.fit_ramsey(*a)), (t, k / 100, np.full(t.size, 100)), \
            {"gamma": 1 / t2, "frequency": f}
    if kind.startswith("rabi"):
        f, span = {"rabi_109khz": (109e3, 40e-6), "rabi_2.497khz": (2.497e3, 1.6e-3)}[kind]
        t = np.linspace(0, span, 41)
        w = 2 * np.pi * f
        p = analysis.rabi_model(t, w, 0.48, 0.5)
        k = rng.binomial(100, np.clip(p, 0, 1))
        return analysis.fit_rabi, (t, k / 100, np.full(t.size, 100)), {"omega": w}
    raise ValueError(f"unknown synthetic dataset {kind!r}")


ROUND_TRIP_KINDS = ("histogram", "parity", "ramsey_130us", "ramsey_14ms",
                    "rabi_109khz", "rabi_2.497khz")


def round_trip_rate(kind: str, n_datasets: int = 200, seed: int = 0, n_sigma: float = 3.0) -> float:
    """Fraction of seeded datasets whose fit recovers every true parameter within n_sigma."""
    ok = 0
    for i in range(n_datasets):
        rng = np.random.default_rng([seed, i])
        fit, data, truth = synthetic(kind, rng)
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")  # clipping of near-unit correlations
                res = fit(*data)
        except analysis.FitError:
            continue
        good = True
        for name, true in truth.items():
            if isinstance(res, dict):
                val, err = res[name], res["uncertainty"]
            else:
                val, err = res[name], res.error(name)
            good &= bool(abs(val - true) <= n_sigma * err)
        ok += good
    return ok / n_datasets


for _kind in ROUND_TRIP_KINDS:
    check(f"round_trip_{_kind}", 12, f"fraction of 200 {_kind} fits recovering the truth")(
        lambda ctx, k=_kind: round_trip_rate(k, 200, ctx.cfg.seeds[0]))


def run_checks(cfg: RunConfig, golden: dict | None = None, names=None, progress=None) -> dict:
    """Run checks and return a manifest with one entry per check."""
    golden = load_golden() if golden is None else golden
    ctx = _Context(cfg)
    rows = []
    for name in names or CHECKS:
        c = CHECKS[name]
        t0 = time.perf_counter()
        row = {"name": name, "criterion": c.criterion, "description": c.description}
        try:
            row["value"] = c.func(ctx)
        except Exception as exc:  # a failing computation is a failed check
            row.update(value=None, passed=False, error=f"{type(exc).__name__}: {exc}")
        else:
            try:
                row["golden"] = golden[name]
                row["passed"] = bool(judge(row["value"], golden[name]))
            except (KeyError, TypeError, ValueError) as exc:
                row.update(passed=False, error=f"missing or malformed golden entry: {exc}")
        rows.append(row)
        if progress:
            progress(row, time.perf_counter() - t0)
    return {"checks": rows, "n_checks": len(rows),
            "n_passed": sum(r["passed"] for r in rows),
            "all_passed": all(r["passed"] for r in rows)}
