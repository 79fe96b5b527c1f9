"""Quantum-trajectory (Monte Carlo wavefunction) unraveling of a pulse.

An independent cross-check of the flagged-scheme bookkeeping in
:mod:`atomsim.pulsescan`. Each trajectory evolves a pure state under the
non-Hermitian Hamiltonian ``H - i/2 sum_k L_k^dag L_k`` and jumps when its
norm falls below a uniform random threshold (waiting-time method).

The drive only connects levels inside small blocks (the connected components
of the coupling graph), so every trajectory lives in one block at a time and
short-time propagators are precomputed per block.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm
from scipy.sparse.csgraph import connected_components

from .atomic import LevelScheme, Manifold
from .pulsescan import ScanConfig, build_flagged_scheme, pulse_for_duration

__all__ = ["TrajectoryEstimate", "unravel", "mc_decomposition"]


@dataclass
class TrajectoryEstimate:
    t_pi: float
    n_trajectories: int
    leakage_error: float
    leakage_se: float
    double_excitation_error: float
    double_excitation_se: float
    never_excited: float
    never_excited_se: float

    @property
    def total_error(self) -> float:
        return self.leakage_error + self.double_excitation_error


class _Blocks:
    """Connected components of the drive, padded to a common size."""

    def __init__(self, scheme: LevelScheme, q: int):
        v = scheme.coupling_matrix(q)
        graph = (np.abs(v) > 0).astype(int)
        n_comp, comp = connected_components(graph, directed=False)
        self.comp = comp
        self.members = [np.flatnonzero(comp == c) for c in range(n_comp)]
        self.size = max(len(m) for m in self.members)
        self.local = np.zeros(scheme.dim, dtype=int)
        for m in self.members:
            self.local[m] = np.arange(len(m))
        # (block, local) -> global level; padding points at -1
        self.glob = -np.ones((n_comp, self.size), dtype=int)
        for c, m in enumerate(self.members):
            self.glob[c, :len(m)] = m


def unravel(scheme: LevelScheme, pulse, n_trajectories: int, seed=0, n_steps: int = 2000,
            flagged_excited=None):
    """Run ``n_trajectories`` from ``scheme.initial`` over the pulse window.

    Returns per-trajectory arrays ``(level_weights, jumps)``: the final
    normalized populations (n_traj x dim) and the number of jumps out of each
    level in ``flagged_excited`` (counted per trajectory).
    """
    rng = np.random.default_rng(seed)
    n = scheme.dim
    blocks = _Blocks(scheme, pulse.q)
    nb, d = blocks.glob.shape
    v = scheme.coupling_matrix(pulse.q)
    h0 = scheme.energies - 0.5j * scheme.total_decay

    t0, t1 = pulse.t_start, pulse.t_end
    dt = (t1 - t0) / n_steps
    # midpoint exponential propagators, one per (step, block)
    props = np.zeros((n_steps, nb, d, d), dtype=complex)
    for c, mem in enumerate(blocks.members):
        k = len(mem)
        hb0 = np.diag(h0[mem])
        vb = v[np.ix_(mem, mem)]
        drive = not np.allclose(vb, 0)
        static = expm(-1j * hb0 * dt)
        for s in range(n_steps):
            if drive:
                om = pulse.envelope(t0 + (s + 0.5) * dt)
                props[s, c, :k, :k] = expm(-1j * (hb0 + 0.5 * om * vb) * dt)
            else:
                props[s, c, :k, :k] = static

    # jump channels grouped by source level
    channels: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    for e in scheme.excited_indices:
        ch = [(g, r) for ee, g, r in scheme.decay_channels if ee == e]
        channels[e] = (np.array([g for g, _ in ch]), np.array([r for _, r in ch]))
    flagged_excited = np.asarray(flagged_excited if flagged_excited is not None else [], dtype=int)
    is_counted = np.zeros(n, dtype=bool)
    is_counted[flagged_excited] = True

    m = n_trajectories
    block = np.full(m, blocks.comp[scheme.initial])
    psi = np.zeros((m, d), dtype=complex)
    psi[:, blocks.local[scheme.initial]] = 1.0
    thresh = rng.random(m)
    jumps = np.zeros(m)
    gamma = scheme.total_decay

    # blocks whose propagator is the identity (undriven ground, sink) are skipped
    active = [c for c, mem in enumerate(blocks.members)
              if not np.allclose(props[:, c, :len(mem), :len(mem)], np.eye(len(mem)))]
    for s in range(n_steps):
        for c in active:
            idx = np.flatnonzero(block == c)
            if idx.size:
                psi[idx] = psi[idx] @ props[s, c].T
        norm2 = (psi.real ** 2 + psi.imag ** 2).sum(axis=1)
        hit = np.flatnonzero(norm2 < thresh)
        if hit.size == 0:
            continue
        # choose the decaying level in proportion to gamma_e |psi_e|^2
        gl = blocks.glob[block[hit]]
        w = np.where(gl >= 0, gamma[np.maximum(gl, 0)], 0.0) * np.abs(psi[hit]) ** 2
        cw = np.cumsum(w, axis=1)
        u = rng.random(hit.size) * cw[:, -1]
        src_local = (cw < u[:, None]).sum(axis=1)
        src = gl[np.arange(hit.size), src_local]
        targets = np.empty(hit.size, dtype=int)
        for e in np.unique(src):
            sel = np.flatnonzero(src == e)
            g, r = channels[int(e)]
            targets[sel] = g[rng.choice(len(g), size=sel.size, p=r / r.sum())]
        jumps[hit] += is_counted[src]
        block[hit] = blocks.comp[targets]
        psi[hit] = 0.0
        psi[hit, blocks.local[targets]] = 1.0
        thresh[hit] = rng.random(hit.size)

    norm2 = np.einsum("ni,ni->n", psi.conj(), psi).real
    pops = np.zeros((m, n))
    rows = np.repeat(np.arange(m), d)
    cols = blocks.glob[block].ravel()
    vals = (np.abs(psi) ** 2 / norm2[:, None]).ravel()
    keep = cols >= 0
    np.add.at(pops, (rows[keep], cols[keep]), vals[keep])
    return pops, jumps


def mc_decomposition(t_pi: float, n_trajectories: int = 100_000, seed=0,
                     config: ScanConfig | None = None, n_steps: int = 2000) -> TrajectoryEstimate:
    """Trajectory estimate of leakage and double-excitation error, with standard errors.

    Per trajectory, double excitation is the number of jumps out of the
    flagged f'=2 copy plus the residual flagged-excited population; leakage
    is the sink indicator plus the sink share of any residual excitation.
    These are the same quantities the master-equation bookkeeping reports.
    """
    config = config or ScanConfig()
    scheme = build_flagged_scheme(config.scheme)
    pulse = pulse_for_duration(t_pi, scheme, config)
    flag_exc = scheme.indices(Manifold.EXCITED_F2, flagged=True)
    pops, jumps = unravel(scheme, pulse, n_trajectories, seed, n_steps, flag_exc)

    exc = np.zeros(scheme.dim, dtype=bool)
    exc[scheme.excited_indices] = True
    asym = np.where(exc, 0.0, pops) + np.where(exc, pops, 0.0) @ scheme.branching_to_ground().T
    leak = asym[:, scheme.index("sink")]
    double = jumps + pops[:, flag_exc].sum(axis=1)
    never = asym[:, scheme.indices(Manifold.GROUND_F3, flagged=False)].sum(axis=1)

    def mean_se(x):
        return float(x.mean()), float(x.std(ddof=1) / np.sqrt(x.size))

    (lm, ls), (dm, ds), (nm, ns) = mean_se(leak), mean_se(double), mean_se(never)
    return TrajectoryEstimate(float(t_pi), n_trajectories, lm, ls, dm, ds, nm, ns)
