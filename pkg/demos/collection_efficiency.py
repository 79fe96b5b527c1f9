"""Collected and fiber-coupled photon fraction for a thermal atom in a tweezer.

A low Gauss-Hermite order keeps this quick; ``atomsim collection`` uses the
configured order (15 by default).
"""
from atomsim.collection import (OpticalSystem, TrapGeometry, collection_efficiency_analytic,
                                success_probability, thermal_average, thermal_sigmas,
                                trap_frequencies)

optics = OpticalSystem()
trap = TrapGeometry()

print(f"solid-angle fraction at NA {optics.na}: sigma {collection_efficiency_analytic(optics.na, 'sigma+'):.4f}, "
      f"pi {collection_efficiency_analytic(optics.na, 'pi'):.4f}")
wr, wz = trap_frequencies(trap)
sr, sz = thermal_sigmas(trap)
print(f"trap: {wr / 6.2832e3:.2f} kHz radial, {wz / 6.2832e3:.2f} kHz axial; "
      f"thermal spread {sr * 1e9:.0f} nm x {sz * 1e9:.0f} nm at {trap.atom_temperature * 1e6:.0f} uK")

for T in (1e-6, 5e-6, 20e-6):
    res = thermal_average(optics, TrapGeometry(atom_temperature=T), order=7, n_grid=384)
    print(f"T = {T * 1e6:4.0f} uK: eta_cc = {res.eta_cc:.5f} (+- {res.convergence_estimate:.1e})")

res = thermal_average(optics, trap, order=7, n_grid=384)
ps = success_probability(res.eta_cc, eta_trans=0.75, eta_det=0.52, eta_pump=0.991, eta_exc=0.983)
print(f"single-photon detection probability per attempt: {ps:.4f}")
