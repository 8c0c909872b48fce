"""Rotation numbers, the rotation-number homomorphism, the collapse map and
wandering diagnostics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence, Tuple

import numpy as np

from .circle import Word, circle_reduce, cyclic_distance
from .errors import DomainError, IntegrityError
from .maps import word_lift


@dataclass(frozen=True)
class RotationEstimate:
    value: float
    iterations: int
    error_budget: float


def _check_lift(lift: Callable, x0: float, circumference: float, samples: int = 64) -> None:
    ys = x0 + np.linspace(0.0, circumference, samples + 1)
    fy = np.array([lift(float(y)) for y in ys])
    tol = 1e-12 * max(1.0, circumference) * (1.0 + np.max(np.abs(fy)))
    if np.any(np.diff(fy) < -tol):
        raise IntegrityError("sampled lift is not monotone")
    period = fy[-1] - fy[0]
    if abs(period - circumference) > 1e-9 * max(1.0, circumference) * (1.0 + abs(fy[0])):
        raise IntegrityError(f"lift does not commute with translation by {circumference}")


def rotation_number(lift: Callable[[float], float], n: int, x0: float = 0.0,
                    circumference: float = 1.0, truncation_allowance: float = 0.0,
                    check: bool = True) -> RotationEstimate:
    """Birkhoff quotient ``(F^n(x0) - x0) / (n * circumference)`` reduced mod 1."""
    if n < 1:
        raise DomainError("need at least one iteration")
    if check:
        _check_lift(lift, x0, circumference)
    y = float(x0)
    for _ in range(n):
        y = lift(y)
    value = circle_reduce((y - x0) / (n * circumference), 1.0)
    return RotationEstimate(value, n, 1.0 / n + truncation_allowance)


def word_rotation_number(dynamics, word: Word, n: int, x0: float = 0.0,
                         truncation_allowance: float = 0.0) -> RotationEstimate:
    return rotation_number(lambda y: word_lift(dynamics, word, y), n, x0,
                           dynamics.circumference, truncation_allowance)


def circle_gap(a: float, b: float) -> float:
    """Distance between two points of R/Z."""
    return float(cyclic_distance(a, b, 1.0))


def word_rotation_numbers(dynamics, words: Sequence[Word], n: int, x0: float = 0.0,
                          truncation_allowance: float = 0.0) -> list:
    """:func:`word_rotation_number` for many words, iterating all orbits together.

    At every letter position the orbits are grouped by generator and sign so
    each group costs one vectorized lift call.
    """
    words = [tuple(w) for w in words]
    if n < 1:
        raise DomainError("need at least one iteration")
    Lam = dynamics.circumference
    for w in words:
        _check_lift(lambda y, w=w: word_lift(dynamics, w, y), x0, Lam)
    width = max((len(w) for w in words), default=0)
    groups = []
    for p in range(width):
        by_letter = {}
        for j, w in enumerate(words):
            if p < len(w):
                by_letter.setdefault(tuple(w[p]), []).append(j)
        groups.append([(k, sign, np.array(js)) for (k, sign), js in sorted(by_letter.items())])
    y = np.full(len(words), float(x0))
    for _ in range(n):
        for letters in groups:
            for k, sign, js in letters:
                y[js] = dynamics.lift(y[js], k, sign)
    budget = 1.0 / n + truncation_allowance
    return [RotationEstimate(circle_reduce(float((v - x0) / (n * Lam)), 1.0), n, budget) for v in y]


def homomorphism_check(dynamics, pairs: Iterable[Tuple[Word, Word]], n: int,
                       x0: float = 0.0) -> float:
    """Largest ``dist(rot(uv), rot(u) + rot(v))`` over the word pairs."""
    pairs = [(tuple(u), tuple(v)) for u, v in pairs]
    words = sorted({w for u, v in pairs for w in (u, v, u + v)})
    rot = dict(zip(words, (r.value for r in word_rotation_numbers(dynamics, words, n, x0))))
    worst = 0.0
    for u, v in pairs:
        worst = max(worst, circle_gap(rot[u + v], rot[u] + rot[v]))
    return worst


def semiconjugacy_collapse(system, y):
    """Send realized coordinates to the base circle, collapsing each gap to its orbit point."""
    return system.collapse(y)


def equivariance_defect(system, ys: Sequence[float], k: int, sign: int = 1) -> float:
    """Max over ``ys`` of ``dist(collapse(f(y)), collapse(y) + sign * rho_k)``."""
    ys = np.asarray(ys, dtype=float)
    image = system.collapse(system.lift(ys, k, sign))
    expected = np.mod(system.collapse(ys) + sign * system.rhos[k - 1], 1.0)
    return float(np.max(cyclic_distance(image, expected, 1.0)))


@dataclass(frozen=True)
class WanderingReport:
    symbolic_ok: bool
    numeric_max_overlap: float
    gaps_checked: int


def wandering_check(system, window: int | None = None) -> WanderingReport:
    """Check that realized gaps within ``window`` are distinct and pairwise disjoint."""
    window = system.window if window is None else window
    if window > system.window:
        raise DomainError(f"window {window} exceeds the realized window {system.window}")
    idx = system.realized_indices()
    keep = np.all(np.abs(idx) <= window, axis=1)
    idx = idx[keep]
    gaps = system.realized_gaps()[keep]
    symbolic_ok = len({tuple(int(v) for v in row) for row in idx}) == len(idx)
    order = np.argsort(gaps[:, 0], kind="stable")
    gaps = gaps[order]
    overlap = 0.0
    if len(gaps) > 1:
        overlap = max(0.0, float(np.max(gaps[:-1, 1] - gaps[1:, 0])))
    if len(gaps):
        # wrap-around: last gap against the first one shifted by the circumference
        overlap = max(overlap, float(gaps[-1, 1] - (gaps[0, 0] + system.circumference)))
    return WanderingReport(symbolic_ok, max(0.0, overlap), len(idx))
