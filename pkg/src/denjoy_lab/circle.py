"""Shared types: Hölder exponent vectors, multi-indices, words, circle points."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence, Tuple, Union

import numpy as np

from .errors import DomainError

MultiIndex = Tuple[int, ...]


class Regime(enum.Enum):
    SUPERCRITICAL = "supercritical"  # sum(taus) > 1
    SUBCRITICAL = "subcritical"  # sum(taus) < 1


@dataclass(frozen=True)
class HolderParams:
    """Exponents (tau_1, ..., tau_d) of the Hölder derivatives.

    ``epsilon`` is ``|sum(taus) - 1|``, so it is positive in both regimes.
    """

    taus: Tuple[float, ...]

    def __post_init__(self):
        taus = tuple(float(t) for t in self.taus)
        if len(taus) < 1:
            raise DomainError("need at least one exponent")
        for t in taus:
            if not (0.0 < t < 1.0):
                raise DomainError(f"exponent {t!r} is not in the open interval (0, 1)")
        if math.fsum(taus) == 1.0:
            raise DomainError("sum of exponents equals 1 exactly; no regime applies")
        object.__setattr__(self, "taus", taus)

    @property
    def d(self) -> int:
        return len(self.taus)

    @property
    def tau_max(self) -> float:
        return max(self.taus)

    @property
    def tau_min(self) -> float:
        return min(self.taus)

    @property
    def total(self) -> float:
        return math.fsum(self.taus)

    @property
    def epsilon(self) -> float:
        return abs(self.total - 1.0)

    @property
    def regime(self) -> Regime:
        return Regime.SUPERCRITICAL if self.total > 1.0 else Regime.SUBCRITICAL

    def tau(self, k: int) -> float:
        """Exponent of generator ``k`` (1-based)."""
        check_generator(k, self.d)
        return self.taus[k - 1]


class Letter(NamedTuple):
    k: int  # generator, 1-based
    sign: int  # +1 or -1


Word = Tuple[Letter, ...]


def make_word(letters) -> Word:
    word = tuple(Letter(int(k), int(s)) for k, s in letters)
    for letter in word:
        if letter.sign not in (1, -1):
            raise DomainError(f"letter sign must be +1 or -1, got {letter.sign}")
        if letter.k < 1:
            raise DomainError(f"generator index must be >= 1, got {letter.k}")
    return word


def word_displacement(word: Word, d: int) -> MultiIndex:
    out = [0] * d
    for k, sign in word:
        check_generator(k, d)
        out[k - 1] += sign
    return tuple(out)


def inverse_word(word: Word) -> Word:
    return tuple(Letter(k, -s) for k, s in reversed(word))


@dataclass(frozen=True)
class Cantor:
    """A point of the base circle that is not blown up (or sits on a gap edge)."""

    base: float

    def __post_init__(self):
        if not (0.0 <= self.base < 1.0):
            raise DomainError(f"Cantor base coordinate {self.base!r} not in [0, 1)")


@dataclass(frozen=True)
class Gap:
    """Point with local affine parameter ``t`` inside the inserted interval ``index``."""

    index: MultiIndex
    t: float

    def __post_init__(self):
        object.__setattr__(self, "index", tuple(int(i) for i in self.index))
        if not (0.0 <= self.t <= 1.0):
            raise DomainError(f"gap parameter {self.t!r} not in [0, 1]")


CirclePoint = Union[Cantor, Gap]


def check_generator(k: int, d: int) -> None:
    if not 1 <= k <= d:
        raise DomainError(f"generator index {k} out of range 1..{d}")


def circle_reduce(x: float, circumference: float = 1.0) -> float:
    """``x`` modulo ``circumference``, always in ``[0, circumference)``."""
    if not math.isfinite(x):
        raise DomainError(f"cannot reduce non-finite value {x!r}")
    if not (circumference > 0 and math.isfinite(circumference)):
        raise DomainError(f"circumference must be positive, got {circumference!r}")
    if 0.0 <= x < circumference:
        return x
    r = x % circumference
    # tiny negative inputs round up to exactly `circumference`
    return 0.0 if r >= circumference else r


def index_offset(i: Sequence[int], k: int, sign: int) -> MultiIndex:
    check_generator(k, len(i))
    if sign not in (1, -1):
        raise DomainError(f"sign must be +1 or -1, got {sign}")
    out = list(i)
    out[k - 1] += sign
    return tuple(out)


def cyclic_distance(x, y, circumference: float):
    """Distance on a circle of the given length; works elementwise on arrays."""
    delta = np.mod(np.asarray(x, dtype=float) - np.asarray(y, dtype=float), circumference)
    return np.minimum(delta, circumference - delta)


def rational_relation(values: Sequence[float], max_coeff: int = 50, max_denominator: int = 10**6,
                      tol: float = 1e-9, rational_tol: float = 1e-14,
                      max_vectors: int = 2 * 10**6):
    """Screen for ``sum(q_k * values_k)`` being an integer with small ``q``.

    Returns a witness coefficient tuple, or ``None`` when no relation is found.
    Each value is first tested for being a rational with denominator at most
    ``max_denominator`` (continued-fraction approximation); then all integer
    vectors with ``|q_k| <= max_coeff`` are enumerated.  For large ``d`` the
    coefficient bound shrinks so that at most ``max_vectors`` vectors are tried.
    ``rational_tol`` is much tighter than ``tol`` because good irrationals have
    convergents with denominators below ``max_denominator`` that are accurate
    to ~1e-12.  Floating inputs can only be screened, never certified
    independent.
    """
    from fractions import Fraction

    vals = np.asarray(values, dtype=float)
    d = len(vals)
    for k, v in enumerate(vals):
        approx = Fraction(float(v)).limit_denominator(max_denominator)
        if abs(float(approx) - v) <= rational_tol:
            q = [0] * d
            q[k] = approx.denominator
            return tuple(q)
    bound = max_coeff
    while bound > 1 and (2 * bound + 1) ** d > max_vectors:
        bound -= 1
    axes = np.arange(-bound, bound + 1)
    grids = np.meshgrid(*([axes] * d), indexing="ij")
    coeffs = np.stack([g.ravel() for g in grids], axis=1)
    coeffs = coeffs[np.any(coeffs != 0, axis=1)]
    combo = np.zeros(len(coeffs))
    for k in range(d):
        combo += coeffs[:, k] * vals[k]
    dist = np.abs(combo - np.round(combo))
    hit = np.flatnonzero(dist <= tol)
    if hit.size:
        return tuple(int(c) for c in coeffs[hit[0]])
    return None
