"""Simulation and analysis toolkit for single-atom Cs atom-photon entanglement.

Modules: ``atomic`` (angular momentum, level scheme), ``dynamics`` (Lindblad
evolution), ``pulsescan`` (excitation-pulse error scan), ``montecarlo``
(trajectory cross-check), ``collection`` (photon collection and fiber
coupling), ``analysis`` (estimators and fits), ``budget`` (infidelity
budget), ``reproduce`` (golden-number checks) and ``cli``.
"""

__version__ = "0.1.0"

from .atomic import SchemeConfig, build_level_scheme  # noqa: E402
from .pulsescan import ScanConfig, scan_pulse_duration, simulate_duration  # noqa: E402
from .collection import OpticalSystem, TrapGeometry, thermal_average  # noqa: E402
from .analysis import CorrelationSet, bell_fidelity, fidelity_lower_bound  # noqa: E402
from .budget import compose_budget, load_entries  # noqa: E402

__all__ = [
    "SchemeConfig",
    "build_level_scheme",
    "ScanConfig",
    "scan_pulse_duration",
    "simulate_duration",
    "OpticalSystem",
    "TrapGeometry",
    "thermal_average",
    "CorrelationSet",
    "bell_fidelity",
    "fidelity_lower_bound",
    "compose_budget",
    "load_entries",
]
