"""Why the excitation pulse has an optimal length.

Short pulses are spectrally broad and leak into f'=3,4 (which can decay to
the f=4 sink); long pulses leave time for a decayed atom to be excited a
second time. The sum of the two errors has a minimum near 10 ns.
"""
import numpy as np

from atomsim.pulsescan import ScanConfig, optimum, scan_pulse_duration

durations = np.array([3, 5, 7, 9, 10, 11, 13, 16, 20, 30, 45, 60]) * 1e-9
points = scan_pulse_duration(durations, ScanConfig())

print(f"{'t_pi (ns)':>9} {'leakage':>9} {'double':>9} {'total':>9}")
for p in points:
    print(f"{p.t_pi * 1e9:9.1f} {p.leakage_error:9.5f} {p.double_excitation_error:9.5f} "
          f"{p.total_error:9.5f}")

best = optimum(points)
print(f"\nbest duration on this grid: {best.t_pi * 1e9:.1f} ns, total error {best.total_error:.4f}")

# the FWHM reading of "pulse duration" puts the optimum at much shorter times
fwhm = scan_pulse_duration(np.array([2, 3, 4, 6, 8, 12]) * 1e-9, ScanConfig(convention="fwhm"))
b = optimum(fwhm)
print(f"with t_pi read as the envelope FWHM: best {b.t_pi * 1e9:.1f} ns, "
      f"total at 12 ns {fwhm[-1].total_error:.4f}")
