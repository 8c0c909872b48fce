"""Distortion control along words and the fixed points it forces.

For a word ``g_{k_n} ... g_{k_1}`` and an interval ``I`` let
``S >= sum_n |h_n(I)|^tau_{k_{n+1}}`` where ``h_n`` is the length-``n`` prefix.
With ``C`` bounding the Hölder constants of ``log g_k'`` and ``tau`` the largest
exponent, every prefix has derivative ratio at most ``exp(2^tau C S)`` on ``I``
together with either flank of length ``2L``, ``L = |I| / (2 exp(2^tau C S))``.
A prefix sending ``I`` off itself but into its ``L``-neighbourhood then maps the
``2L``-neighbourhood ``J`` into itself with a fixed point of multiplier <= 1/2.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .circle import HolderParams, Regime, Word, make_word
from .errors import DomainError, InvariantViolation, PreconditionError
from .maps import word_derivative, word_lift

Interval = Tuple[float, float]


class Outcome(enum.Enum):
    NOT_APPLICABLE = "not_applicable"


NOT_APPLICABLE = Outcome.NOT_APPLICABLE


def _taus(params) -> Tuple[float, ...]:
    taus = params.taus if isinstance(params, HolderParams) else tuple(float(t) for t in params)
    for t in taus:
        if not 0.0 < t <= 1.0:
            raise DomainError(f"exponent {t!r} not in (0, 1]")
    return taus


def _interval(interval) -> Interval:
    lo, hi = (float(v) for v in interval)
    if not hi > lo:
        raise DomainError(f"degenerate interval [{lo}, {hi}]")
    return lo, hi


def word_images(dynamics, word: Word, interval) -> List[Interval]:
    """``[I, h_1(I), ..., h_n(I)]`` in lift coordinates (lifts are increasing)."""
    return _images(dynamics, word, _interval(interval))


def _images(dynamics, word: Word, interval: Interval) -> List[Interval]:
    # no length check: flanks of width 2L may be below float resolution
    lo, hi = interval
    ends = np.array([lo, hi])
    out = [(lo, hi)]
    for k, sign in word:
        ends = dynamics.lift(ends, k, sign)
        out.append((float(ends[0]), float(ends[1])))
    return out


def word_sum_S(images: Sequence[Interval], word: Word, params) -> float:
    """``sum_{n < len(word)} |images[n]|^tau_{k_{n+1}}``."""
    if len(images) != len(word) + 1:
        raise DomainError(f"need {len(word) + 1} images, got {len(images)}")
    taus = _taus(params)
    return math.fsum((b - a) ** taus[k - 1] for (a, b), (k, _) in zip(images, word))


@dataclass(frozen=True)
class DistortionContext:
    word: Word
    interval: Interval
    C_values: Tuple[float, ...]
    taus: Tuple[float, ...]
    S: float
    images: Tuple[Interval, ...] = field(repr=False, default=())

    @property
    def C(self) -> float:
        return max(self.C_values)

    @property
    def tau_max(self) -> float:
        return max(self.taus)

    @property
    def length(self) -> float:
        return self.interval[1] - self.interval[0]

    @property
    def bound(self) -> float:
        """``exp(2^tau C S)``, the derivative-ratio bound."""
        return math.exp(2.0 ** self.tau_max * self.C * self.S)

    @property
    def L(self) -> float:
        return self.length / (2.0 * self.bound)

    @property
    def J(self) -> Interval:
        lo, hi = self.interval
        return lo - 2.0 * self.L, hi + 2.0 * self.L

    @property
    def I_right(self) -> Interval:
        hi = self.interval[1]
        return hi, hi + 2.0 * self.L

    @property
    def I_left(self) -> Interval:
        lo = self.interval[0]
        return lo - 2.0 * self.L, lo


def make_context(dynamics, word, interval, C_values: Sequence[float], params,
                 S: Optional[float] = None) -> DistortionContext:
    """Context with ``S`` computed from the word images unless a larger one is given."""
    word = make_word(word)
    interval = _interval(interval)
    taus = _taus(params)
    C_values = tuple(float(c) for c in C_values)
    if not C_values or min(C_values) < 0 or not all(map(math.isfinite, C_values)):
        raise DomainError("Hölder constants must be finite and non-negative")
    images = tuple(word_images(dynamics, word, interval))
    exact = word_sum_S(images, word, taus)
    if S is None:
        S = exact
    elif S < exact:
        raise PreconditionError(f"S={S!r} is below the image sum {exact!r}")
    return DistortionContext(word, interval, C_values, taus, float(S), images)


@dataclass(frozen=True)
class StageRow:
    stage: int
    len_I: float
    len_Iprime: float  # larger of the two flank images
    ratio: float
    bound: float
    flanks_ok: bool  # |h_j(I')| <= |h_j(I)| and likewise for I''
    ratio_ok: bool
    near_bound: bool


@dataclass(frozen=True)
class DistortionReport:
    ratio_bound_ok: bool
    flanks_ok: bool
    max_ratio: float
    bound: float
    per_stage: Tuple[StageRow, ...]

    def csv_rows(self):
        return (["stage", "len_I", "len_Iprime", "ratio", "bound"],
                [[r.stage, r.len_I, r.len_Iprime, r.ratio, r.bound] for r in self.per_stage])


def _ratio_trace(dynamics, word: Word, pieces: Sequence[Interval], n: int) -> np.ndarray:
    """Per-stage max/min of the prefix derivative over each piece union with ``pieces[0]``.

    Returns shape ``(len(word) + 1, len(pieces) - 1)``.
    """
    ys = np.concatenate([np.linspace(a, b, n) for a, b in pieces])
    deriv = np.ones_like(ys)
    out = np.empty((len(word) + 1, len(pieces) - 1))
    for j in range(len(word) + 1):
        core = deriv[:n]
        for p in range(1, len(pieces)):
            flank = deriv[p * n:(p + 1) * n]
            out[j, p - 1] = max(core.max(), flank.max()) / min(core.min(), flank.min())
        if j < len(word):
            k, sign = word[j]
            deriv = deriv * dynamics.lift_derivative(ys, k, sign)
            ys = dynamics.lift(ys, k, sign)
    return out


def distortion_check(dynamics, context: DistortionContext, samples: int = 64,
                     refine: int = 4, rel_tol: float = 1e-9) -> DistortionReport:
    """Check both control conditions at every prefix of the context word.

    Derivatives are sampled at ``samples`` points per interval; stages whose
    ratio comes within 1% of the bound are resampled ``refine`` times denser.
    When ``2L`` is below the float spacing at the ends of ``I`` the flanks
    collapse onto the endpoints and are checked at that resolution only.
    """
    word = context.word
    bound = context.bound
    pieces = [context.interval, context.I_right, context.I_left]
    ratios = _ratio_trace(dynamics, word, pieces, samples).max(axis=1)
    near = ratios >= 0.99 * bound
    if np.any(near) and refine > 1:
        ratios = np.maximum(ratios, _ratio_trace(dynamics, word, pieces, samples * refine).max(axis=1))
    right = _images(dynamics, word, context.I_right)
    left = _images(dynamics, word, context.I_left)
    rows = []
    for j in range(len(word) + 1):
        a, b = context.images[j]
        len_I = b - a
        flank = max(right[j][1] - right[j][0], left[j][1] - left[j][0])
        rows.append(StageRow(
            stage=j, len_I=len_I, len_Iprime=flank, ratio=float(ratios[j]), bound=bound,
            flanks_ok=flank <= len_I * (1.0 + rel_tol),
            ratio_ok=ratios[j] <= bound * (1.0 + rel_tol),
            near_bound=bool(near[j]),
        ))
    return DistortionReport(
        ratio_bound_ok=all(r.ratio_ok for r in rows),
        flanks_ok=all(r.flanks_ok for r in rows),
        max_ratio=float(ratios.max()),
        bound=bound,
        per_stage=tuple(rows),
    )


@dataclass(frozen=True)
class FixedPoint:
    x: float
    multiplier: float
    displacement: float
    prefix: int  # length of the prefix h_n that fixes x
    shift: int  # h_n(x) = x + shift * circumference
    J: Interval


def contracting_fixed_point(h: Callable[[float], float], a: float, b: float,
                            tol: Optional[float] = None, max_iter: int = 400):
    """Fixed point of an increasing ``h`` with ``h([a, b]) ⊂ [a, b]`` by bisection.

    Returns ``(x, h(x) - x)`` or ``None`` when the inclusion fails.
    """
    if not b > a:
        raise DomainError("empty interval")
    tol = 1e-12 * (b - a) if tol is None else tol
    ga, gb = h(a) - a, h(b) - b
    if ga < 0 or gb > 0:
        return None
    if ga <= tol:
        return a, ga
    if -gb <= tol:
        return b, gb
    lo, hi = a, b
    x, g = a, ga
    for _ in range(max_iter):
        x = 0.5 * (lo + hi)
        g = h(x) - x
        if abs(g) <= tol or not lo < x < hi:
            break
        if g > 0:
            lo = x
        else:
            hi = x
    return x, g


def displacement_sign_changes(h: Callable, a: float, b: float, n: int = 10_000) -> int:
    """Sign changes (and exact zeros) of ``h(x) - x`` on an ``n``-point grid of ``[a, b]``."""
    xs = np.linspace(a, b, n)
    g = np.asarray(h(xs), dtype=float) - xs
    return int(np.count_nonzero(g[:-1] * g[1:] < 0) + np.count_nonzero(g == 0))


def hyperbolic_fixed_point(dynamics, context: DistortionContext, prefix: Optional[int] = None):
    """Look for a prefix ``h_n`` sending ``I`` off itself into its ``L``-neighbourhood.

    For the first such prefix (or only ``prefix`` when given) with
    ``h_n(J) ⊂ J`` the fixed point in ``J`` is returned; otherwise
    :data:`NOT_APPLICABLE`.
    """
    lo, hi = context.interval
    L = context.L
    a_J, b_J = context.J
    Lam = dynamics.circumference
    tol = 1e-12 * (b_J - a_J)
    candidates = range(1, len(context.word) + 1) if prefix is None else [prefix]
    for n in candidates:
        if not 1 <= n <= len(context.word):
            raise DomainError(f"prefix {n} out of range")
        a, b = context.images[n]
        shift = round((0.5 * (a + b) - 0.5 * (lo + hi)) / Lam)
        a -= shift * Lam
        b -= shift * Lam
        if not (b <= lo or a >= hi):
            continue
        if a < lo - L or b > hi + L:
            continue
        sub = context.word[:n]

        def h(x, sub=sub, shift=shift):
            return word_lift(dynamics, sub, x) - shift * Lam

        found = contracting_fixed_point(h, a_J, b_J, tol)
        if found is None:
            continue
        x, g = found
        mult = float(word_derivative(dynamics, sub, x))
        return FixedPoint(float(x), mult, float(g), n, int(shift), (a_J, b_J))
    return NOT_APPLICABLE


class Verdict(enum.Enum):
    CONTRADICTION = "contradiction"
    NO_CONTRADICTION = "no_contradiction"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class DriverResult:
    verdict: Verdict
    word: Word = ()
    weight: float = math.nan
    S: float = math.nan
    fixed_point: object = None
    evidence: Tuple[Tuple[int, float], ...] = ()  # (n, oracle weight) for no-contradiction
    trace: Tuple[tuple, ...] = ()  # (M0, terminal run, path weight, stagewise S)


SHARPNESS_SIZES = (4, 8, 16, 32, 64)


def sharpness_weights(params, sizes: Sequence[int] = SHARPNESS_SIZES) -> Tuple[Tuple[int, float], ...]:
    """Minimal monotone path weights of the gap-length field on ``[[0, n]]^2``."""
    from .paths import gap_length_grid, oracle_min_path

    return tuple((n, oracle_min_path(gap_length_grid(params, n), params)[0]) for n in sizes)


def contradiction_driver(target, params, N: int, M0_max: int, *, dynamics=None,
                         interval=None, C_values=None) -> DriverResult:
    """Run the selection engine until its path ends in a straight run of length >= N.

    ``target`` is a weight grid (exponent sum > 1) or a constructed system
    (exponent sum < 1).  For grids the witness word has weight at most the
    stagewise bound ``S``; when ``dynamics``, ``interval`` and ``C_values`` are
    also given, the word is further probed for a hyperbolic fixed point.
    """
    from .paths import (WeightGrid, admissible_chain, build_schedule, extract_path,
                        path_weight, terminal_run, theoretical_S)

    if params is None:
        params = target.params
    if not isinstance(params, HolderParams):
        params = HolderParams(tuple(params))
    if N < 0 or M0_max < 1:
        raise DomainError("need N >= 0 and M0_max >= 1")
    if params.regime is Regime.SUBCRITICAL:
        if params.d != 2:
            return DriverResult(Verdict.INCONCLUSIVE)
        evidence = sharpness_weights(params)
        weights = [w for _, w in evidence]
        growing = all(b > a for a, b in zip(weights, weights[1:]))
        return DriverResult(Verdict.NO_CONTRADICTION if growing else Verdict.INCONCLUSIVE,
                            evidence=evidence)
    if not isinstance(target, WeightGrid):
        raise PreconditionError("exponent sum > 1 needs a weight grid to search")
    trace = []
    for M0 in range(1, M0_max + 1):
        schedule = build_schedule(params, M0)
        if any(c >= n for c, n in zip(schedule.corner(M0), target.dims)):
            break
        path = extract_path(admissible_chain(target, schedule, params), schedule)
        weight = path_weight(target, path, params)
        S = theoretical_S(params, schedule).stagewise
        run = terminal_run(path)
        trace.append((M0, run, weight, S))
        if weight > S * (1.0 + 1e-12):
            raise InvariantViolation(f"path weight {weight} exceeds the bound {S}")
        if run < N:
            continue
        word = path.word()
        fixed = None
        if dynamics is not None:
            if interval is None or C_values is None:
                raise PreconditionError("probing dynamics needs an interval and Hölder constants")
            ctx = make_context(dynamics, word, interval, C_values, params, S=None)
            fixed = hyperbolic_fixed_point(dynamics, ctx)
            if fixed is NOT_APPLICABLE:
                continue
        return DriverResult(Verdict.CONTRADICTION, word, weight, S, fixed, trace=tuple(trace))
    return DriverResult(Verdict.INCONCLUSIVE, trace=tuple(trace))
