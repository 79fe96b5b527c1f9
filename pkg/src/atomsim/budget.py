"""Infidelity budget: dephasing, bounded contributions and their composition."""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass

from .analysis import Estimate

__all__ = [
    "BudgetEntry",
    "BudgetReport",
    "CoherenceInputs",
    "coherence_factor",
    "dephasing_error",
    "compose_budget",
    "inferred_fidelity",
    "polarization_error_bound",
    "detection_noise_bound",
    "load_entries",
]

KINDS = ("measured", "bound", "modeled")


@dataclass(frozen=True)
class BudgetEntry:
    """One infidelity source. For ``kind="bound"`` the value is an upper limit."""

    name: str
    value: float
    uncertainty: float = 0.0
    kind: str = "modeled"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        if not (math.isfinite(self.value) and self.value >= 0):
            raise ValueError(f"{self.name}: value must be finite and non-negative")
        if not (math.isfinite(self.uncertainty) and self.uncertainty >= 0):
            raise ValueError(f"{self.name}: uncertainty must be finite and non-negative")

    @classmethod
    def from_dict(cls, d: dict) -> "BudgetEntry":
        unknown = set(d) - {"name", "value", "uncertainty", "kind"}
        if unknown:
            raise ValueError(f"unknown budget entry keys: {sorted(unknown)}")
        return cls(str(d["name"]), float(d["value"]), float(d.get("uncertainty", 0.0)),
                   d.get("kind", "modeled"))

    def formatted(self) -> str:
        if self.kind == "bound":
            return f"<{self.value:.0e}"
        if self.uncertainty == 0:
            return f"~{self.value:g}"
        return f"{self.value:g} +- {self.uncertainty:g}"


def load_entries(path) -> list[BudgetEntry]:
    with open(path) as fh:
        data = json.load(fh)
    rows = data["entries"] if isinstance(data, dict) else data
    if not isinstance(rows, list):
        raise ValueError("budget file must hold a list of entries")
    return [BudgetEntry.from_dict(r) for r in rows]


@dataclass(frozen=True)
class CoherenceInputs:
    """Idle times and coherence times (s) around the atom-photon mapping."""

    t_pre: float
    tau_sens: float
    t_post: float
    tau_map: float
    tau_sens_err: float = 0.0
    tau_map_err: float = 0.0

    def __post_init__(self):
        for name in ("tau_sens", "tau_map"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("t_pre", "t_post", "tau_sens_err", "tau_map_err"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be non-negative")


def coherence_factor(inputs: CoherenceInputs) -> Estimate:
    """C = exp(-t_pre/tau_sens) exp(-t_post/tau_map), first-order error propagation."""
    c = math.exp(-inputs.t_pre / inputs.tau_sens - inputs.t_post / inputs.tau_map)
    dc_s = c * inputs.t_pre / inputs.tau_sens ** 2
    dc_m = c * inputs.t_post / inputs.tau_map ** 2
    return Estimate(c, math.hypot(dc_s * inputs.tau_sens_err, dc_m * inputs.tau_map_err))


def dephasing_error(inputs: CoherenceInputs) -> BudgetEntry:
    """(1 - C)/2: only the X and Y parities lose contrast, Z is unaffected."""
    c = coherence_factor(inputs)
    return BudgetEntry("atom dephasing", (1 - c.value) / 2, c.uncertainty / 2, "modeled")


@dataclass
class BudgetReport:
    entries: list
    central: float
    central_uncertainty: float
    bound_total: float
    measured_fidelity: float | None = None
    measured_uncertainty: float | None = None
    consistent: bool | None = None
    diagnostic: str = ""

    @property
    def upper_total(self) -> float:
        return self.central + self.bound_total

    @property
    def predicted_fidelity(self) -> tuple[float, float]:
        """(lowest, highest) fidelity allowed by the budget."""
        return 1 - self.upper_total, 1 - self.central

    def to_dict(self) -> dict:
        lo, hi = self.predicted_fidelity
        return {
            "entries": [asdict(e) for e in self.entries],
            "central_total": self.central,
            "central_uncertainty": self.central_uncertainty,
            "bound_total": self.bound_total,
            "upper_total": self.upper_total,
            "predicted_fidelity_range": [lo, hi],
            "measured_fidelity": self.measured_fidelity,
            "measured_uncertainty": self.measured_uncertainty,
            "verdict": (None if self.consistent is None
                        else "pass" if self.consistent else "inconsistent"),
            "diagnostic": self.diagnostic,
        }

    def table(self) -> str:
        w = max(len("source of error"), *(len(e.name) for e in self.entries))
        lines = [f"{'source of error':<{w}}  contribution", "-" * (w + 16)]
        lines += [f"{e.name:<{w}}  {e.formatted()}" for e in self.entries]
        lines.append("-" * (w + 16))
        lines.append(f"{'total (central)':<{w}}  {self.central:.4f} +- {self.central_uncertainty:.4f}")
        lines.append(f"{'bounds at limit':<{w}}  +{self.bound_total:.4f}")
        if self.consistent is not None:
            lines.append(f"{'verdict':<{w}}  {'pass' if self.consistent else 'inconsistent'}")
        return "\n".join(lines)


def compose_budget(entries, measured_fidelity: float | None = None,
                   measured_uncertainty: float = 0.0, n_sigma: float = 2.0) -> BudgetReport:
    """Sum central values; bound entries only raise the upper edge.

    With a measured fidelity the verdict is "pass" when it lies within
    ``n_sigma`` combined standard deviations of the predicted interval
    ``[1 - (central + bounds), 1 - central]``.
    """
    entries = list(entries)
    if not entries:
        raise ValueError("empty budget")
    central = math.fsum(e.value for e in entries if e.kind != "bound")
    bounds = math.fsum(e.value for e in entries if e.kind == "bound")
    sig = math.sqrt(math.fsum(e.uncertainty ** 2 for e in entries if e.kind != "bound"))
    report = BudgetReport(entries, central, sig, bounds)
    if measured_fidelity is None:
        return report
    report.measured_fidelity = measured_fidelity
    report.measured_uncertainty = measured_uncertainty
    lo, hi = report.predicted_fidelity
    combined = math.hypot(sig, measured_uncertainty)
    if report.upper_total > 1 or central > 1:
        report.consistent = False
        report.diagnostic = f"contributions sum to {report.upper_total:.4g} > 1"
        return report
    gap = max(lo - measured_fidelity, measured_fidelity - hi, 0.0)
    report.consistent = gap <= n_sigma * combined
    report.diagnostic = (f"measured {measured_fidelity:.4f} vs predicted [{lo:.4f}, {hi:.4f}]; "
                         f"gap {gap:.4f}, allowed {n_sigma * combined:.4f}")
    return report


def inferred_fidelity(f_measured: float, f_err: float, epsilon_state: float,
                      epsilon_err: float) -> Estimate:
    """Fidelity corrected for state-detection error: F + eps, errors in quadrature."""
    for name, v in (("f_measured", f_measured), ("epsilon_state", epsilon_state)):
        if not 0 <= v <= 1:
            raise ValueError(f"{name} must lie in [0, 1]")
    value = f_measured + epsilon_state
    if value > 1:
        warnings.warn(f"inferred fidelity {value:.4f} exceeds 1; clipped")
        value = 1.0
    return Estimate(value, math.hypot(f_err, epsilon_err))


def polarization_error_bound(extinction_ratio: float, tilt_rms_deg: float) -> BudgetEntry:
    """Wrong-polarization fraction 1/extinction + sin^2(tilt), as a bound entry."""
    if not extinction_ratio > 1:
        raise ValueError("extinction_ratio must exceed 1")
    frac = 1 / extinction_ratio + math.sin(math.radians(tilt_rms_deg)) ** 2
    return BudgetEntry("excitation polarization", min(frac, 1.0), 0.0, "bound")


def detection_noise_bound(gate_ns: float, dark_rate_hz: float, herald_prob: float) -> BudgetEntry:
    """False-herald fraction: background probability in the gate over herald probability."""
    if gate_ns <= 0 or dark_rate_hz < 0 or not 0 < herald_prob <= 1:
        raise ValueError("need gate_ns > 0, dark_rate_hz >= 0, 0 < herald_prob <= 1")
    return BudgetEntry("photon detection noise", gate_ns * 1e-9 * dark_rate_hz / herald_prob,
                       0.0, "bound")
