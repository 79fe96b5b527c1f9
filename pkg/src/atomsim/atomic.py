"""Angular-momentum algebra and the cesium D2 excitation level scheme.

Angular momenta are carried internally as doubled integers (``two_j``) so that
half-integer selection rules stay exact. The public functions accept ints,
floats or :class:`fractions.Fraction` and convert once at the boundary.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import lru_cache

import numpy as np

__all__ = [
    "AngularMomentum",
    "Manifold",
    "Level",
    "LevelScheme",
    "SchemeConfig",
    "wigner3j",
    "wigner6j",
    "clebsch_gordan",
    "branching_ratio",
    "decay_rate",
    "build_level_scheme",
    "CS_GAMMA",
    "CS_NUCLEAR_SPIN",
]

TWO_PI = 2.0 * math.pi

# Cs 6p3/2 natural linewidth and hyperfine splittings (Steck, "Cesium D Line Data").
CS_GAMMA = TWO_PI * 5.234e6
CS_SPLIT_F2_F3 = TWO_PI * 151.2247e6
CS_SPLIT_F3_F4 = TWO_PI * 201.2871e6
CS_NUCLEAR_SPIN = Fraction(7, 2)
CS_J_GROUND = Fraction(1, 2)
CS_J_EXCITED = Fraction(3, 2)


def _doubled(x) -> int:
    """Return 2*x as an int, refusing anything that is not a half-integer."""
    if isinstance(x, AngularMomentum):
        return x.two_j
    two = 2 * Fraction(x).limit_denominator(1000)
    if two.denominator != 1:
        raise ValueError(f"{x!r} is not an integer or half-integer")
    return int(two)


@dataclass(frozen=True, order=True)
class AngularMomentum:
    two_j: int

    def __post_init__(self):
        if self.two_j < 0:
            raise ValueError("angular momentum must be non-negative")

    @classmethod
    def of(cls, j) -> "AngularMomentum":
        return cls(_doubled(j))

    @property
    def j(self) -> float:
        return self.two_j / 2

    @property
    def multiplicity(self) -> int:
        return self.two_j + 1

    def projections(self) -> list[int]:
        """Doubled projections -2j, -2j+2, ..., 2j."""
        return list(range(-self.two_j, self.two_j + 1, 2))

    def allows(self, two_m: int) -> bool:
        return abs(two_m) <= self.two_j and (two_m - self.two_j) % 2 == 0

    def __str__(self):
        return str(Fraction(self.two_j, 2))


# --------------------------------------------------------------------------
# 3j / 6j symbols (Racah formulas evaluated in exact integer arithmetic)
# --------------------------------------------------------------------------

_fact = math.factorial


def _triangle_ok(a: int, b: int, c: int) -> bool:
    return (a + b + c) % 2 == 0 and abs(a - b) <= c <= a + b


def _delta_sq(a: int, b: int, c: int) -> Fraction:
    # arguments doubled; triangle already checked
    return Fraction(
        _fact((a + b - c) // 2) * _fact((a - b + c) // 2) * _fact((-a + b + c) // 2),
        _fact((a + b + c) // 2 + 1),
    )


def _signed_sqrt(q: Fraction, s: Fraction) -> float:
    """Evaluate s*sqrt(q) with one rounding on each factor."""
    if s == 0:
        return 0.0
    # sqrt of numerator and denominator separately keeps ~1 ulp for large ints
    root = math.sqrt(q.numerator) / math.sqrt(q.denominator)
    return float(s) * root


@lru_cache(maxsize=None)
def _wigner3j_doubled(j1, j2, j3, m1, m2, m3) -> tuple[Fraction, Fraction]:
    """Return (q, s) with 3j = s*sqrt(q); zero symbols return s == 0."""
    zero = (Fraction(1), Fraction(0))
    if m1 + m2 + m3 != 0:
        return zero
    for j, m in ((j1, m1), (j2, m2), (j3, m3)):
        if abs(m) > j or (j - m) % 2:
            return zero
    if not _triangle_ok(j1, j2, j3):
        return zero

    # undoubled integer combinations
    a = (j1 + j2 - j3) // 2
    b = (j1 - m1) // 2
    c = (j2 + m2) // 2
    d = (j3 - j2 + m1) // 2
    e = (j3 - j1 - m2) // 2
    kmin = max(0, -d, -e)
    kmax = min(a, b, c)
    total = 0
    denom_lcm = 1
    terms = []
    for k in range(kmin, kmax + 1):
        den = _fact(k) * _fact(a - k) * _fact(b - k) * _fact(c - k) * _fact(d + k) * _fact(e + k)
        terms.append(((-1) ** k, den))
        denom_lcm = math.lcm(denom_lcm, den)
    for sign, den in terms:
        total += sign * (denom_lcm // den)
    s = Fraction(total, denom_lcm)
    phase = (j1 - j2 - m3) // 2
    if phase % 2:
        s = -s
    q = _delta_sq(j1, j2, j3) * (
        _fact((j1 + m1) // 2) * _fact((j1 - m1) // 2)
        * _fact((j2 + m2) // 2) * _fact((j2 - m2) // 2)
        * _fact((j3 + m3) // 2) * _fact((j3 - m3) // 2)
    )
    return q, s


def wigner3j(j1, j2, j3, m1, m2, m3) -> float:
    """Wigner 3j symbol. Returns 0 whenever a selection rule fails."""
    args = tuple(_doubled(x) for x in (j1, j2, j3)) + tuple(
        int(2 * Fraction(x).limit_denominator(1000)) for x in (m1, m2, m3)
    )
    return _signed_sqrt(*_wigner3j_doubled(*args))


@lru_cache(maxsize=None)
def _wigner6j_doubled(j1, j2, j3, j4, j5, j6) -> tuple[Fraction, Fraction]:
    triads = ((j1, j2, j3), (j1, j5, j6), (j4, j2, j6), (j4, j5, j3))
    if not all(_triangle_ok(*t) for t in triads):
        return Fraction(1), Fraction(0)
    q = Fraction(1)
    for t in triads:
        q *= _delta_sq(*t)
    alphas = [sum(t) // 2 for t in triads]
    betas = [(j1 + j2 + j4 + j5) // 2, (j2 + j3 + j5 + j6) // 2, (j3 + j1 + j6 + j4) // 2]
    s = Fraction(0)
    for t in range(max(alphas), min(betas) + 1):
        den = 1
        for a in alphas:
            den *= _fact(t - a)
        for b in betas:
            den *= _fact(b - t)
        s += Fraction((-1) ** t * _fact(t + 1), den)
    return q, s


def wigner6j(j1, j2, j3, j4, j5, j6) -> float:
    """Wigner 6j symbol {j1 j2 j3; j4 j5 j6}; 0 when a triad is not a triangle."""
    return _signed_sqrt(*_wigner6j_doubled(*(_doubled(x) for x in (j1, j2, j3, j4, j5, j6))))


def clebsch_gordan(f_prime, m_prime, one, q, f, m) -> float:
    """Clebsch-Gordan coefficient <f' m'; 1 q | f m>.

    ``one`` is the photon angular momentum and is kept in the signature for
    readability at call sites; any value other than 1 is accepted and used.
    """
    j1, j2, J = _doubled(f_prime), _doubled(one), _doubled(f)
    m1 = int(2 * Fraction(m_prime).limit_denominator(1000))
    m2 = int(2 * Fraction(q).limit_denominator(1000))
    M = int(2 * Fraction(m).limit_denominator(1000))
    qq, s = _wigner3j_doubled(j1, j2, J, m1, m2, -M)
    if s == 0:
        return 0.0
    phase = (j1 - j2 + M) // 2
    return (-1) ** (phase % 2) * math.sqrt(J + 1) * _signed_sqrt(qq, s)


def branching_ratio(f, f_prime, j=CS_J_GROUND, j_prime=CS_J_EXCITED,
                    nuclear_spin=CS_NUCLEAR_SPIN) -> float:
    """Fraction of spontaneous decay from hyperfine manifold f' into f."""
    if abs(Fraction(f) - Fraction(f_prime)) > 1:
        raise ValueError(f"f={f} <- f'={f_prime} is not dipole allowed")
    six = wigner6j(j, nuclear_spin, f, f_prime, 1, j_prime)
    return float((2 * Fraction(j_prime) + 1) * (2 * Fraction(f) + 1)) * six * six


def decay_rate(f, m_f, f_prime, m_f_prime, gamma_total, **atom) -> float:
    """Rate of the |f m_f> <- |f' m_f'> channel.

    The Clebsch-Gordan factor is taken as <f m_f; 1 q | f' m_f'> with
    q = m_f' - m_f, the orientation for which the channel rates of every
    excited sublevel sum to ``gamma_total``.
    """
    q = Fraction(m_f_prime) - Fraction(m_f)
    if abs(q) > 1 or abs(Fraction(f) - Fraction(f_prime)) > 1:
        return 0.0
    c = clebsch_gordan(f, m_f, 1, q, f_prime, m_f_prime)
    if c == 0.0:
        return 0.0
    return gamma_total * branching_ratio(f, f_prime, **atom) * c * c


# --------------------------------------------------------------------------
# Level scheme
# --------------------------------------------------------------------------


class Manifold(str, enum.Enum):
    GROUND_F3 = "ground_f3"
    SINK = "ground_f4_sink"
    EXCITED_F2 = "excited_f2"
    EXCITED_F3 = "excited_f3"
    EXCITED_F4 = "excited_f4"

    @property
    def excited(self) -> bool:
        return self.name.startswith("EXCITED")


_EXCITED_F = {Manifold.EXCITED_F2: 2, Manifold.EXCITED_F3: 3, Manifold.EXCITED_F4: 4}


@dataclass(frozen=True)
class Level:
    manifold: Manifold
    f: AngularMomentum
    two_m: int | None
    energy_offset: float = 0.0
    decayed_flag: bool = False

    @property
    def m(self) -> float | None:
        return None if self.two_m is None else self.two_m / 2

    @property
    def excited(self) -> bool:
        return self.manifold.excited

    @property
    def label(self) -> str:
        if self.manifold is Manifold.SINK:
            return "sink"
        prime = "p" if self.excited else ""
        tag = "_flag" if self.decayed_flag else ""
        return f"f{prime}{self.f}_m{self.two_m // 2:+d}{tag}"


@dataclass(frozen=True)
class SchemeConfig:
    """Inputs to :func:`build_level_scheme` (angular frequencies in rad/s).

    Hyperfine offsets are measured from f'=2 and default to the standard
    Cs 6p3/2 splittings. ``level_offsets`` maps level labels to extra
    diagonal shifts (e.g. Zeeman shifts for sensitivity studies).
    """

    gamma_rad_per_s: float = CS_GAMMA
    detuning_rad_per_s: float = 0.0
    offset_f3_rad_per_s: float = CS_SPLIT_F2_F3
    offset_f4_rad_per_s: float = CS_SPLIT_F2_F3 + CS_SPLIT_F3_F4
    flagged: bool = False
    level_offsets: dict = field(default_factory=dict, hash=False, compare=False)

    def __post_init__(self):
        for name in ("gamma_rad_per_s", "detuning_rad_per_s",
                     "offset_f3_rad_per_s", "offset_f4_rad_per_s"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.gamma_rad_per_s < 0:
            raise ValueError("gamma_rad_per_s must be non-negative")
        for k, v in self.level_offsets.items():
            if not math.isfinite(v):
                raise ValueError(f"level offset for {k} must be finite")

    @classmethod
    def from_dict(cls, d: dict) -> "SchemeConfig":
        known = {k: d[k] for k in (
            "gamma_rad_per_s", "detuning_rad_per_s", "offset_f3_rad_per_s",
            "offset_f4_rad_per_s", "flagged", "level_offsets") if k in d}
        unknown = set(d) - set(known)
        if unknown:
            raise ValueError(f"unknown scheme keys: {sorted(unknown)}")
        return cls(**known)

    def to_dict(self) -> dict:
        return {
            "gamma_rad_per_s": self.gamma_rad_per_s,
            "detuning_rad_per_s": self.detuning_rad_per_s,
            "offset_f3_rad_per_s": self.offset_f3_rad_per_s,
            "offset_f4_rad_per_s": self.offset_f4_rad_per_s,
            "flagged": self.flagged,
            "level_offsets": dict(self.level_offsets),
        }


class LevelScheme:
    """Sublevels, dipole couplings and decay channels of the excitation model.

    ``dipole_couplings[(g, e)]`` is the Clebsch-Gordan factor
    <f m; 1 q | f' m'> for a photon of polarization q = m' - m.
    ``decay_channels`` lists ``(excited, ground, rate)``.
    Not mutated after construction.
    """

    def __init__(self, levels, dipole_couplings, decay_channels, gamma, initial, driven):
        self.levels = tuple(levels)
        self.dipole_couplings = dict(dipole_couplings)
        self.decay_channels = tuple(decay_channels)
        self.gamma = float(gamma)
        self.initial = initial
        self.driven = driven
        n = len(self.levels)
        self._index = {lvl.label: i for i, lvl in enumerate(self.levels)}

        self.energies = np.array([lvl.energy_offset for lvl in self.levels])
        rates = np.zeros((n, n))
        for e, g, r in self.decay_channels:
            rates[g, e] += r
        self.rate_matrix = rates  # rate_matrix[g, e]
        self.total_decay = rates.sum(axis=0)
        self._coupling = {}
        for arr in (self.energies, self.rate_matrix, self.total_decay):
            arr.setflags(write=False)

    @property
    def dim(self) -> int:
        return len(self.levels)

    def __len__(self):
        return len(self.levels)

    def index(self, label: str) -> int:
        return self._index[label]

    @property
    def labels(self) -> list[str]:
        return [lvl.label for lvl in self.levels]

    def indices(self, manifold=None, flagged=None) -> list[int]:
        out = []
        for i, lvl in enumerate(self.levels):
            if manifold is not None and lvl.manifold is not manifold:
                continue
            if flagged is not None and lvl.decayed_flag != flagged:
                continue
            out.append(i)
        return out

    @property
    def excited_indices(self) -> list[int]:
        return [i for i, lvl in enumerate(self.levels) if lvl.excited]

    def coupling_matrix(self, q: int) -> np.ndarray:
        """Real symmetric matrix of CG factors for drive polarization q."""
        if q not in self._coupling:
            n = self.dim
            v = np.zeros((n, n))
            for (g, e), c in self.dipole_couplings.items():
                if self.levels[e].two_m - self.levels[g].two_m == 2 * q:
                    v[e, g] = c
                    v[g, e] = c
            v.setflags(write=False)
            self._coupling[q] = v
        return self._coupling[q]

    def branching_to_ground(self) -> np.ndarray:
        """Matrix P[g, e] = rate(e -> g) / total rate of e (zero columns for ground)."""
        with np.errstate(invalid="ignore", divide="ignore"):
            p = np.where(self.total_decay > 0, self.rate_matrix / self.total_decay, 0.0)
        return p


def build_level_scheme(config: SchemeConfig | None = None) -> LevelScheme:
    """Build the 29-level Cs scheme (41 levels when ``config.flagged``).

    Flagged extension: decays into f=3 land in a decayed-flag copy of the
    ground manifold, which the drive couples to a flagged copy of f'=2; the
    flagged f'=2 copy decays back into the flagged ground copy. Decays into
    f=4 always land in the single sink state.
    """
    cfg = config or SchemeConfig()
    gamma = cfg.gamma_rad_per_s
    e_off = {
        2: cfg.detuning_rad_per_s,
        3: cfg.detuning_rad_per_s + cfg.offset_f3_rad_per_s,
        4: cfg.detuning_rad_per_s + cfg.offset_f4_rad_per_s,
    }
    ground_f = AngularMomentum.of(3)
    levels: list[Level] = []

    def add(manifold, f, two_m, energy=0.0, flag=False):
        levels.append(Level(manifold, AngularMomentum.of(f) if f is not None else ground_f,
                            two_m, energy, flag))
        return len(levels) - 1

    ground = {tm: add(Manifold.GROUND_F3, 3, tm) for tm in ground_f.projections()}
    excited = {}
    for man, fp in _EXCITED_F.items():
        for tm in AngularMomentum.of(fp).projections():
            excited[(fp, tm)] = add(man, fp, tm, e_off[fp])
    sink = add(Manifold.SINK, 4, None)
    flag_ground, flag_excited = {}, {}
    if cfg.flagged:
        flag_ground = {tm: add(Manifold.GROUND_F3, 3, tm, 0.0, True)
                       for tm in ground_f.projections()}
        flag_excited = {tm: add(Manifold.EXCITED_F2, 2, tm, e_off[2], True)
                        for tm in AngularMomentum.of(2).projections()}

    if cfg.level_offsets:
        labels = {lvl.label: i for i, lvl in enumerate(levels)}
        for lab, shift in cfg.level_offsets.items():
            if lab not in labels:
                raise ValueError(f"unknown level label {lab!r}")
            i = labels[lab]
            levels[i] = replace(levels[i], energy_offset=levels[i].energy_offset + shift)

    couplings = {}

    def couple(g_map, e_map, fp):
        # e_map keyed by doubled m'
        for tm, g in g_map.items():
            for dq in (-2, 0, 2):
                e = e_map.get(tm + dq)
                if e is None:
                    continue
                c = clebsch_gordan(3, Fraction(tm, 2), 1, Fraction(dq, 2), fp,
                                   Fraction(tm + dq, 2))
                if c != 0.0:
                    couplings[(g, e)] = c

    for fp in (2, 3, 4):
        couple(ground, {k[1]: v for k, v in excited.items() if k[0] == fp}, fp)
    if cfg.flagged:
        couple(flag_ground, flag_excited, 2)

    channels = []
    target_ground = flag_ground if cfg.flagged else ground
    for (fp, tm_e), e in excited.items():
        for tm_g, g in target_ground.items():
            r = decay_rate(3, Fraction(tm_g, 2), fp, Fraction(tm_e, 2), gamma)
            if r > 0:
                channels.append((e, g, r))
        if fp >= 3:
            channels.append((e, sink, gamma * branching_ratio(4, fp)))
    for tm_e, e in flag_excited.items():
        for tm_g, g in flag_ground.items():
            r = decay_rate(3, Fraction(tm_g, 2), 2, Fraction(tm_e, 2), gamma)
            if r > 0:
                channels.append((e, g, r))

    return LevelScheme(levels, couplings, channels, gamma,
                       initial=ground[0], driven=excited[(2, 0)])
