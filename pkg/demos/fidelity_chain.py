"""From parity counts to a fidelity estimate and an error budget.

Synthetic parity scans are generated in the three analysis bases, fitted,
turned into correlations, combined into a Bell-state fidelity, corrected
for state-detection error, and compared with the shipped error budget.
"""
import numpy as np

from atomsim import analysis, budget
from atomsim.config import data_path

rng = np.random.default_rng(1)
theta = np.arange(0, 181, 15.0)
shots = np.full(theta.size, 150)

corr = {}
for basis, c in (("X", 0.909), ("Y", 0.919), ("Z", 0.939)):
    p_even = 0.5 + 0.5 * c * np.cos(np.radians(4 * theta) - 0.2)
    even = rng.binomial(shots, p_even)
    fit = analysis.fit_parity(analysis.ParityDataset(basis, theta, even, shots - even, shots))
    corr[basis] = analysis.correlation_from_fit(fit)
    print(f"{basis}: correlation {corr[basis]['correlation']:.3f} +- {corr[basis]['uncertainty']:.3f} "
          f"at {corr[basis]['theta_star_deg']:.1f} deg")

cs = analysis.CorrelationSet(*(corr[b]["correlation"] for b in "XYZ"),
                             *(corr[b]["uncertainty"] for b in "XYZ"))
f = analysis.bell_fidelity(cs)
inf = budget.inferred_fidelity(f.value, f.uncertainty, 0.02, 0.02)
print(f"\nfidelity {f.value:.3f} +- {f.uncertainty:.3f}; corrected for detection {inf.value:.3f} +- {inf.uncertainty:.3f}")

report = budget.compose_budget(budget.load_entries(data_path("budget_entries.json")),
                               f.value, f.uncertainty)
print()
print(report.table())
print(report.diagnostic)
