"""Run configuration: one JSON document, unit-suffixed keys, shipped defaults."""
from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .atomic import SchemeConfig
from .budget import CoherenceInputs
from .collection import OpticalSystem, TrapGeometry
from .pulsescan import ScanConfig

__all__ = ["ConfigError", "RunConfig", "load_defaults", "load_config", "data_path", "dumps"]

class ConfigError(ValueError):
    pass


def data_path(name: str):
    return resources.files("atomsim") / "data" / name


def load_defaults() -> dict:
    return json.loads(data_path("defaults.json").read_text())


# maps with user-chosen keys, replaced wholesale rather than merged
FREE_FORM = {"level_offsets"}


def _merge(base: dict, over: dict, where="") -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if k not in out:
            raise ConfigError(f"unknown config key {where}{k!r}")
        if isinstance(out[k], dict) and isinstance(v, dict) and k not in FREE_FORM:
            out[k] = _merge(out[k], v, f"{where}{k}.")
        else:
            out[k] = v
    return out


@dataclass
class RunConfig:
    scheme: SchemeConfig
    scan: ScanConfig
    grid_ns: np.ndarray
    monte_carlo: dict
    optics: OpticalSystem
    trap: TrapGeometry
    thermal: dict
    sweep: dict
    losses: dict | None
    coherence: CoherenceInputs
    fidelity: dict
    seeds: list
    output_dir: str
    raw: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        try:
            scheme = SchemeConfig.from_dict(d["scheme"])
            ps = dict(d["pulse_scan"])
            grid = np.linspace(float(ps.pop("grid_start_ns")), float(ps.pop("grid_stop_ns")),
                               int(ps.pop("grid_points")))
            scan = ScanConfig.from_dict(ps, scheme)
            unknown = set(ps) - set(scan.to_dict())
            if unknown:
                raise ConfigError(f"unknown pulse_scan keys: {sorted(unknown)}")
            co = d["coherence"]
            coherence = CoherenceInputs(
                t_pre=co["t_pre_us"] * 1e-6, tau_sens=co["tau_sens_us"] * 1e-6,
                t_post=co["t_post_us"] * 1e-6, tau_map=co["tau_map_us"] * 1e-6,
                tau_sens_err=co.get("tau_sens_err_us", 0.0) * 1e-6,
                tau_map_err=co.get("tau_map_err_us", 0.0) * 1e-6)
            losses = d.get("losses") or None
            if losses is not None:
                bad = set(losses) - {"eta_trans", "eta_det", "eta_pump", "eta_exc"}
                if bad:
                    raise ConfigError(f"unknown loss factors: {sorted(bad)}")
            seeds = [int(s) for s in d["seeds"]]
            if not seeds:
                raise ConfigError("seeds must be non-empty")
            return cls(scheme, scan, grid, dict(d["monte_carlo"]),
                       OpticalSystem.from_dict(d["optics"]), TrapGeometry.from_dict(d["trap"]),
                       dict(d["thermal"]), dict(d["sweep"]), losses, coherence,
                       dict(d["fidelity"]), seeds, str(d["output_dir"]), copy.deepcopy(d))
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid configuration: {exc}") from exc

    def to_dict(self) -> dict:
        """Fully resolved configuration, echoed into every output artifact."""
        d = copy.deepcopy(self.raw)
        d["scheme"] = self.scheme.to_dict()
        d["optics"] = self.optics.to_dict()
        d["trap"] = self.trap.to_dict()
        return d


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    """Defaults, then the JSON file at ``path``, then ``overrides``."""
    d = load_defaults()
    if path is not None:
        try:
            with open(path) as fh:
                user = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
        if not isinstance(user, dict):
            raise ConfigError(f"{path}: top level must be an object")
        d = _merge(d, user)
    if overrides:
        d = _merge(d, overrides)
    return RunConfig.from_dict(d)


def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_clean(v) for v in x.tolist()]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def dumps(obj) -> str:
    """Deterministic JSON (sorted keys, non-finite floats as null)."""
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"
