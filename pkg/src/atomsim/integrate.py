"""Adaptive Dormand-Prince 5(4) integrator for complex state vectors."""
from __future__ import annotations

import numpy as np

__all__ = ["IntegrationError", "dopri5"]

# Butcher tableau (Dormand & Prince 1980), FSAL
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B_LOW = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640,
                   -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B - _B_LOW


class IntegrationError(RuntimeError):
    """Raised when the step size underflows or a callback rejects the state."""


def dopri5(fun, t0, y0, t1, rtol=1e-8, atol=1e-10, h0=None, max_step=np.inf,
           project=None, on_step=None, max_steps=2_000_000):
    """Integrate ``y' = fun(t, y)`` from t0 to t1 and return y(t1).

    ``project(y)`` is applied to every accepted step (and its result used as
    the new state); ``on_step(t, y)`` is called after it. Either may raise to
    abort. Returns ``(y, stats)`` with accepted/rejected step counts.
    """
    t = float(t0)
    t1 = float(t1)
    y = np.array(y0, dtype=complex)
    span = t1 - t
    if span < 0:
        raise ValueError("integration runs forward only")
    stats = {"accepted": 0, "rejected": 0, "nfev": 0}
    if span == 0:
        return y, stats

    k = np.empty((7,) + y.shape, dtype=complex)
    k[0] = fun(t, y)
    stats["nfev"] += 1

    if h0 is None:
        # Hairer's starting-step heuristic, simplified
        scale = atol + rtol * np.abs(y)
        d0 = np.sqrt(np.mean(np.abs(y / scale) ** 2))
        d1 = np.sqrt(np.mean(np.abs(k[0] / scale) ** 2))
        h0 = 1e-6 * span if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h = min(h0, span, max_step)
    h_min = 1e-14 * max(abs(t0), abs(t1), span)
    fac_prev = 1e-4

    while t < t1:
        if stats["accepted"] + stats["rejected"] >= max_steps:
            raise IntegrationError(f"exceeded {max_steps} steps at t={t:.6g}")
        if t + h > t1:
            h = t1 - t
        for s in range(1, 7):
            acc = y.copy()
            for j, a in enumerate(_A[s]):
                if a:
                    acc += h * a * k[j]
            k[s] = fun(t + _C[s] * h, acc)
        stats["nfev"] += 6
        y_new = acc  # stage 7 abscissa equals the 5th-order solution (FSAL)
        err_vec = h * np.tensordot(_E, k, axes=1)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = float(np.max(np.abs(err_vec / scale)))

        if err <= 1.0:
            t += h
            if project is not None:
                # projection is a roundoff-level correction; keep the FSAL stage
                y_new = project(y_new)
            k[0] = k[6]
            y = y_new
            stats["accepted"] += 1
            if on_step is not None:
                on_step(t, y)
            # PI controller (Gustafsson), exponents for order 5
            err = max(err, 1e-10)
            fac = 0.9 * err ** (-0.7 / 5) * fac_prev ** (0.4 / 5)
            fac = min(5.0, max(0.2, fac))
            fac_prev = err
            h = min(h * fac, max_step)
        else:
            stats["rejected"] += 1
            h *= max(0.2, 0.9 * err ** (-1 / 5))
            if h < h_min:
                raise IntegrationError(f"step size underflow at t={t:.6g} (h={h:.3g})")
    return y, stats
