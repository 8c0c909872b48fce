"""Reference dynamics and word evaluation on realized circles.

Anything with ``d``, ``circumference``, ``lift(y, k, sign)`` and
``lift_derivative(y, k, sign)`` counts as circle dynamics here;
:class:`~denjoy_lab.denjoy.DenjoySystem` is the main example.  Lifts act on
real numbers (or arrays) and commute with translation by the circumference.
"""

from __future__ import annotations

from typing import Callable, Optional, Sequence

import numpy as np

from .circle import Word, check_generator
from .errors import DomainError


class Rotation:
    """Rigid rotations by ``rhos`` on a circle of length ``circumference``."""

    def __init__(self, rhos: Sequence[float], circumference: float = 1.0):
        self.rhos = tuple(float(r) for r in rhos)
        self.circumference = float(circumference)

    @property
    def d(self) -> int:
        return len(self.rhos)

    def lift(self, y, k: int, sign: int = 1):
        check_generator(k, self.d)
        shift = sign * self.rhos[k - 1] * self.circumference
        return float(y) + shift if np.ndim(y) == 0 else np.asarray(y, dtype=float) + shift

    def lift_derivative(self, y, k: int, sign: int = 1):
        check_generator(k, self.d)
        return 1.0 if np.ndim(y) == 0 else np.ones_like(np.asarray(y, dtype=float))

    def log_derivative(self, y, k: int, sign: int = 1):
        return np.log(self.lift_derivative(y, k, sign))


class ExplicitDynamics:
    """Generators given as explicit lift / derivative callables.

    ``maps[k-1]`` is ``(lift, derivative)`` for ``f_k``; ``inverses`` (same
    shape) is optional and only needed for words that use inverse letters.
    """

    def __init__(self, maps: Sequence[tuple], circumference: float = 1.0,
                 inverses: Optional[Sequence[tuple]] = None):
        self._maps = list(maps)
        self._inverses = list(inverses) if inverses is not None else None
        self.circumference = float(circumference)

    @property
    def d(self) -> int:
        return len(self._maps)

    def _pick(self, k: int, sign: int) -> tuple:
        check_generator(k, self.d)
        if sign == 1:
            return self._maps[k - 1]
        if self._inverses is None:
            raise DomainError(f"no inverse supplied for generator {k}")
        return self._inverses[k - 1]

    def lift(self, y, k: int, sign: int = 1):
        return self._pick(k, sign)[0](y)

    def lift_derivative(self, y, k: int, sign: int = 1):
        return self._pick(k, sign)[1](y)

    def log_derivative(self, y, k: int, sign: int = 1):
        return np.log(self.lift_derivative(y, k, sign))


def word_lift(dynamics, word: Word, y):
    """Apply the letters of ``word`` left to right (first letter acts first)."""
    for k, sign in word:
        y = dynamics.lift(y, k, sign)
    return y


def word_derivative(dynamics, word: Word, y):
    """Chain-rule derivative of the word's lift at ``y``."""
    deriv = np.ones_like(np.asarray(y, dtype=float)) if np.ndim(y) else 1.0
    for k, sign in word:
        deriv = deriv * dynamics.lift_derivative(y, k, sign)
        y = dynamics.lift(y, k, sign)
    return deriv


def word_orbit(dynamics, word: Word, y) -> list:
    """``[y, h_1(y), ..., h_n(y)]`` for the prefixes ``h_j`` of ``word``."""
    out = [y]
    for k, sign in word:
        y = dynamics.lift(y, k, sign)
        out.append(y)
    return out


LiftEvaluator = Callable[[float], float]
