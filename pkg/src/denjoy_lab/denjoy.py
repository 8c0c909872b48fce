"""Commuting Denjoy counterexamples with mixed Hölder exponents.

Every point of the orbit ``p + i_1 rho_1 + ... + i_d rho_d`` of the base circle
is replaced by an interval of length ``1 / (1 + sum |i_k|^(1/tau_k))``.  Inside
the inserted intervals the rotations are extended by conjugating through the
cotangent chart ``phi_I(x) = -cot(pi (x - a) / |I|) / |I|``, in which every
generator acts as the identity.  The extended maps therefore commute exactly,
have derivative 1 on the Cantor set, and are C^(1+tau_k) when
``sum(taus) < 1``.

Two layers are kept apart:

* symbolic dynamics on :class:`~denjoy_lab.circle.Cantor` /
  :class:`~denjoy_lab.circle.Gap` points, which involves no truncation;
* the realized circle of length ``1 + sum of gap lengths`` in which only the
  gaps with ``max |i_k| <= window`` are inserted.  Answers expressed in realized
  coordinates are exact up to the omitted mass, bounded by ``tail_bound``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .circle import (
    Cantor,
    CirclePoint,
    Gap,
    HolderParams,
    MultiIndex,
    Regime,
    check_generator,
    circle_reduce,
    cyclic_distance,
    index_offset,
    rational_relation,
)
from .errors import CapacityError, DomainError, InvariantViolation, RegimeError

MAX_REALIZED_GAPS = 4_000_000


class Side(enum.Enum):
    LEFT = "left"
    RIGHT = "right"


def _as_params(params) -> HolderParams:
    return params if isinstance(params, HolderParams) else HolderParams(tuple(params))


def _require_subcritical(params: HolderParams) -> None:
    if params.regime is not Regime.SUBCRITICAL:
        raise RegimeError(
            f"sum of exponents is {params.total:.6g} >= 1; wandering gaps only exist "
            "for sum(taus) < 1"
        )


def gap_length(params, i: Sequence[int]) -> float:
    params = _as_params(params)
    if len(i) != params.d:
        raise DomainError(f"index {tuple(i)} has wrong length for d={params.d}")
    return 1.0 / (1.0 + math.fsum(abs(ik) ** (1.0 / t) for ik, t in zip(i, params.taus)))


def gap_lengths(params: HolderParams, idx: np.ndarray) -> np.ndarray:
    """Vectorized :func:`gap_length` over the rows of an integer array."""
    idx = np.asarray(idx)
    denom = np.ones(idx.shape[0])
    for k, t in enumerate(params.taus):
        denom += np.abs(idx[:, k]).astype(float) ** (1.0 / t)
    return 1.0 / denom


def window_indices(d: int, window: int) -> np.ndarray:
    """All multi-indices with ``max |i_k| <= window``, in lexicographic order."""
    axis = np.arange(-window, window + 1)
    grids = np.meshgrid(*([axis] * d), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


class GapSum(NamedTuple):
    partial: float
    tail_bound: float


def _tail_bound(params: HolderParams, window: int, cutoff: int = 10**6) -> float:
    # Split the omitted indices by the coordinate k maximizing |i_k|^(1/tau_k).
    # With n = |i_k| every other coordinate obeys |i_j| <= n^(tau_j / tau_k), and
    # leaving the window forces n >= (window + 1)^(tau_k / tau_j) for some j.
    taus = params.taus
    d = params.d
    total = 0.0
    for k, tk in enumerate(taus):
        start = min((window + 1) ** (tk / tj) for tj in taus)
        n_lo = max(1, math.ceil(start - 1e-9))
        n_hi = max(cutoff, n_lo)
        n = np.arange(n_lo, n_hi + 1, dtype=float)
        count = np.full_like(n, 2.0)  # both signs of i_k
        for j, tj in enumerate(taus):
            if j != k:
                count *= 2.0 * np.floor(n ** (tj / tk) * (1.0 + 1e-12)) + 1.0
        head = math.fsum(count / (1.0 + n ** (1.0 / tk)))
        # n > n_hi: 2n^a + 1 <= 3n^a and the term is <= 2 * 3^(d-1) n^(-1 - eps/tau_k)
        s = params.epsilon / tk
        total += head + 2.0 * 3.0 ** (d - 1) * n_hi ** (-s) / s
    return total


def total_gap_sum(params, window: int) -> GapSum:
    """Gap mass inside the window plus a certified bound on everything outside."""
    params = _as_params(params)
    _require_subcritical(params)
    if window < 0:
        raise DomainError("window must be non-negative")
    lengths = gap_lengths(params, window_indices(params.d, window))
    return GapSum(math.fsum(lengths), _tail_bound(params, window))


class GapMapValue(NamedTuple):
    t_out: float
    dt: float  # d t_out / d t
    derivative: float  # derivative in circle length units


def midpoint_offset(u, ratio):
    """``t_out - 1/2`` as a function of ``u = t - 1/2`` (``|u| < 1/2``).

    Same map as :func:`local_gap_map`, written around the midpoint where
    ``cot(pi t) = -tan(pi u)``; small offsets keep full relative precision.
    """
    return np.arctan(ratio * np.tan(np.pi * np.asarray(u, dtype=float))) / np.pi


def _local_map(t, ratio):
    """Arrays version of the gap-to-gap map in local parameters."""
    t = np.asarray(t, dtype=float)
    ratio = np.asarray(ratio, dtype=float)
    flip = t > 0.5
    s = np.where(flip, 1.0 - t, t)
    sn = np.sin(np.pi * s)
    cs = np.cos(np.pi * s)
    # arccot(ratio * cot(pi s)) / pi with range (0, pi)
    out = np.arctan2(sn, ratio * cs) / np.pi
    out = np.where(flip, 1.0 - out, out)
    middle = np.abs(t - 0.5) <= 0.25
    with np.errstate(invalid="ignore"):
        out = np.where(middle, 0.5 + midpoint_offset(np.where(middle, t - 0.5, 0.0), ratio), out)
    out = np.where(t <= 0.0, 0.0, np.where(t >= 1.0, 1.0, out))
    dt = ratio / (sn * sn + ratio * ratio * cs * cs)
    return out, dt


def local_gap_map(t: float, len_src: float, len_dst: float) -> GapMapValue:
    """Image parameter and derivatives of the extension from one gap to another.

    The extension is ``phi_dst^-1 o phi_src`` with the cotangent chart, i.e.
    ``cot(pi t_out) = (len_dst / len_src) cot(pi t)``.
    """
    if not (0.0 <= t <= 1.0):
        raise DomainError(f"local parameter {t!r} not in [0, 1]")
    if not (len_src > 0 and len_dst > 0):
        raise DomainError("gap lengths must be positive")
    ratio = len_dst / len_src
    out, dt = _local_map(t, ratio)
    dt = float(dt)
    return GapMapValue(float(out), dt, ratio * dt)


@dataclass(frozen=True)
class ConditionFReport:
    index: MultiIndex
    k: int
    F_value: float
    bound: float  # 2^(1/tau_min) / tau_min
    B: float
    a: int


def _condition_F_array(params: HolderParams, idx: np.ndarray, k: int) -> np.ndarray:
    tk = params.taus[k - 1]
    ik = idx[:, k - 1].astype(float)
    others = np.ones(idx.shape[0])
    for j, t in enumerate(params.taus):
        if j != k - 1:
            others += np.abs(idx[:, j]).astype(float) ** (1.0 / t)
    here = np.abs(ik) ** (1.0 / tk)
    nxt = np.abs(ik + 1.0) ** (1.0 / tk)
    return np.abs(nxt - here) / (others + nxt) * (others + here) ** tk


def verify_condition_F(params, i: Sequence[int], k: int) -> ConditionFReport:
    """Evaluate ``|l(i + e_k) / l(i) - 1| * l(i)^(-tau_k)`` and check its bound."""
    params = _as_params(params)
    _require_subcritical(params)
    check_generator(k, params.d)
    i = tuple(int(v) for v in i)
    if len(i) != params.d:
        raise DomainError(f"index {i} has wrong length for d={params.d}")
    value = float(_condition_F_array(params, np.array([i]), k)[0])
    tmin = params.tau_min
    bound = 2.0 ** (1.0 / tmin) / tmin
    B = 1.0 + math.fsum(abs(v) ** (1.0 / t) for j, (v, t) in enumerate(zip(i, params.taus)) if j != k - 1)
    ik = i[k - 1]
    a = -ik if ik < 0 else ik + 1  # i_k >= 0 reduces to -1 - i_k
    if not value <= bound:
        raise InvariantViolation(f"condition F fails at {i}, k={k}: {value} > {bound}")
    return ConditionFReport(i, k, value, bound, B, a)


def condition_F_sweep(params, radius: int):
    """Largest F over ``max |i_j| <= radius`` and every generator.

    Returns ``(max_value, argmax_index, argmax_k, bound)``.
    """
    params = _as_params(params)
    _require_subcritical(params)
    idx = window_indices(params.d, radius)
    best = (-1.0, None, None)
    for k in range(1, params.d + 1):
        values = _condition_F_array(params, idx, k)
        pos = int(np.argmax(values))
        if values[pos] > best[0]:
            best = (float(values[pos]), tuple(int(v) for v in idx[pos]), k)
    tmin = params.tau_min
    return best[0], best[1], best[2], 2.0 ** (1.0 / tmin) / tmin


class DenjoySystem:
    """A commuting d-tuple of circle diffeomorphisms with wandering gaps.

    The realized circle has length ``circumference = 1 + sum of realized gap
    lengths``; the Cantor set keeps the Lebesgue mass of the base circle, and
    the realized coordinate 0 is the left end of the gap ``I_(0,...,0)``.

    Realized maps (:meth:`lift`, :meth:`lift_derivative`) accept arrays.
    """

    def __init__(self, taus, rhos, base_point: float = 0.0, window: int = 20,
                 *, screen_relations: bool = True):
        params = _as_params(taus)
        _require_subcritical(params)
        rhos = tuple(float(r) for r in rhos)
        if len(rhos) != params.d:
            raise DomainError(f"expected {params.d} rotation numbers, got {len(rhos)}")
        for r in rhos:
            if not (0.0 < r < 1.0):
                raise DomainError(f"rotation number {r!r} not in (0, 1)")
        if not (0.0 <= base_point < 1.0):
            raise DomainError(f"base point {base_point!r} not in [0, 1)")
        window = int(window)
        if window < 0:
            raise DomainError("window must be non-negative")
        if (2 * window + 1) ** params.d > MAX_REALIZED_GAPS:
            raise CapacityError(f"window {window} realizes too many gaps for d={params.d}")
        if screen_relations:
            relation = rational_relation(rhos)
            if relation is not None:
                raise DomainError(
                    f"rotation numbers look rationally dependent (coefficients {relation})"
                )

        self.params = params
        self.rhos = rhos
        self.base_point = float(base_point)
        self.window = window
        gap_sum = total_gap_sum(params, window)
        self.partial_sum = gap_sum.partial
        self.tail_bound = gap_sum.tail_bound
        self.circumference = 1.0 + gap_sum.partial
        self._build_tables()

    @property
    def d(self) -> int:
        return self.params.d

    def __repr__(self):
        return (f"DenjoySystem(taus={self.params.taus}, rhos={self.rhos}, "
                f"base_point={self.base_point}, window={self.window})")

    # -- construction -----------------------------------------------------

    def _base_points(self, idx: np.ndarray) -> np.ndarray:
        # elementwise accumulation so single points and tables agree bit for bit
        s = np.full(idx.shape[0], self.base_point)
        for k, r in enumerate(self.rhos):
            s = s + idx[:, k] * r
        s = np.mod(s, 1.0)
        s[s >= 1.0] = 0.0
        return s

    def _relative(self, x: np.ndarray) -> np.ndarray:
        theta = np.mod(np.asarray(x, dtype=float) - self.base_point, 1.0)
        theta[theta >= 1.0] = 0.0
        return theta

    def _build_tables(self):
        d, W = self.d, self.window
        idx = window_indices(d, W)
        theta = self._relative(self._base_points(idx))
        order = np.argsort(theta, kind="stable")
        theta = theta[order]
        idx = idx[order]
        if np.any(np.diff(theta) <= 0.0):
            raise DomainError("two realized gaps sit on the same orbit point; "
                              "rotation numbers are not independent enough for this window")
        if np.any(idx[0] != 0):
            raise InvariantViolation("origin gap is not first in cyclic order")
        lengths = gap_lengths(self.params, idx)
        cumlen = np.concatenate(([0.0], np.cumsum(lengths)))
        self._idx = idx
        self._theta = theta
        self._len = lengths
        self._cumlen = cumlen
        self._left = theta + cumlen[:-1]
        self._right = self._left + lengths
        side = 2 * W + 1
        strides = side ** np.arange(d)
        self._strides = strides
        codes = (idx + W) @ strides
        self._pos_of_code = np.empty(side ** d, dtype=np.int64)
        self._pos_of_code[codes] = np.arange(len(idx))
        # per generator and sign: target position (-1 outside the window),
        # target length, and the realized location of collapsed targets
        self._targets = {}
        for k in range(1, d + 1):
            for sign in (1, -1):
                tgt = idx.copy()
                tgt[:, k - 1] += sign
                inside = np.all(np.abs(tgt) <= W, axis=1)
                pos = np.full(len(idx), -1, dtype=np.int64)
                pos[inside] = self._pos_of_code[(tgt[inside] + W) @ strides]
                tlen = gap_lengths(self.params, tgt)
                where = self._realize_theta(self._relative(self._base_points(tgt)), Side.RIGHT)
                self._targets[k, sign] = (pos, tlen, where)

    # -- indices and orbit ------------------------------------------------

    @property
    def gap_count(self) -> int:
        return len(self._idx)

    def realized_indices(self) -> np.ndarray:
        """Realized multi-indices in cyclic order, starting at the origin gap."""
        return self._idx.copy()

    def realized_gaps(self) -> np.ndarray:
        """``(left, right)`` realized endpoints, same order as :meth:`realized_indices`."""
        return np.stack([self._left, self._right], axis=1)

    def is_realized(self, i: Sequence[int]) -> bool:
        return len(i) == self.d and all(abs(v) <= self.window for v in i)

    def _position(self, i: Sequence[int]) -> int:
        code = int((np.asarray(i) + self.window) @ self._strides)
        return int(self._pos_of_code[code])

    def gap_length(self, i: Sequence[int]) -> float:
        return gap_length(self.params, i)

    def base_orbit_point(self, i: Sequence[int]) -> float:
        if len(i) != self.d:
            raise DomainError(f"index {tuple(i)} has wrong length for d={self.d}")
        return float(self._base_points(np.array([i]))[0])

    # -- realized coordinates ---------------------------------------------

    def _realize_theta(self, theta: np.ndarray, side: Side) -> np.ndarray:
        pos = np.searchsorted(self._theta, theta, side=side.value)
        return theta + self._cumlen[pos]

    def blowup_coordinate(self, x: float, side: Side = Side.RIGHT) -> float:
        """Realized coordinate of base point ``x``.

        When ``x`` is a realized orbit point, ``side`` picks the left or right
        end of its inserted gap.
        """
        side = Side(side)
        theta = self._relative(np.array([circle_reduce(x)]))
        return float(self._realize_theta(theta, side)[0])

    def realize(self, pt: CirclePoint) -> float:
        if isinstance(pt, Gap):
            if len(pt.index) != self.d:
                raise DomainError(f"index {pt.index} has wrong length for d={self.d}")
            if self.is_realized(pt.index):
                pos = self._position(pt.index)
                return float(self._left[pos] + pt.t * self._len[pos])
            return self.blowup_coordinate(self.base_orbit_point(pt.index))
        return self.blowup_coordinate(pt.base)

    def _check_realized(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if np.any(~np.isfinite(y)) or np.any(y < 0.0) or np.any(y >= self.circumference):
            raise DomainError(f"realized coordinate outside [0, {self.circumference})")
        return y

    def locate(self, y: float) -> CirclePoint:
        """Symbolic point at realized coordinate ``y`` in ``[0, circumference)``.

        Gap endpoints are returned as ``Gap(i, 0.0)`` / ``Gap(i, 1.0)``.
        """
        y = float(self._check_realized(y))
        pos = int(np.searchsorted(self._left, y, side="right")) - 1
        if y <= self._right[pos]:
            t = min(1.0, max(0.0, float((y - self._left[pos]) / self._len[pos])))
            return Gap(tuple(int(v) for v in self._idx[pos]), t)
        theta = y - self._cumlen[pos + 1]
        return Cantor(circle_reduce(self.base_point + theta))

    def collapse(self, y):
        """Base-circle coordinate of realized points; gaps collapse to their orbit point."""
        scalar = np.ndim(y) == 0
        y = np.mod(np.asarray(y, dtype=float), self.circumference)
        y = np.atleast_1d(y)
        y[y >= self.circumference] = 0.0
        pos = np.searchsorted(self._left, y, side="right") - 1
        in_gap = y <= self._right[pos]
        theta = np.where(in_gap, self._theta[pos], y - self._cumlen[pos + 1])
        out = np.mod(self.base_point + theta, 1.0)
        out[out >= 1.0] = 0.0
        return float(out[0]) if scalar else out

    # -- symbolic dynamics ------------------------------------------------

    def apply_generator(self, pt: CirclePoint, k: int, sign: int = 1) -> CirclePoint:
        check_generator(k, self.d)
        if isinstance(pt, Cantor):
            return Cantor(circle_reduce(pt.base + sign * self.rhos[k - 1]))
        target = index_offset(pt.index, k, sign)
        value = local_gap_map(pt.t, gap_length(self.params, pt.index), gap_length(self.params, target))
        return Gap(target, value.t_out)

    def generator_derivative(self, pt: CirclePoint, k: int, sign: int = 1) -> float:
        check_generator(k, self.d)
        if isinstance(pt, Cantor):
            return 1.0
        target = index_offset(pt.index, k, sign)
        return local_gap_map(pt.t, gap_length(self.params, pt.index),
                             gap_length(self.params, target)).derivative

    # -- realized dynamics ------------------------------------------------

    def _split(self, y):
        y = np.mod(np.asarray(y, dtype=float), self.circumference)
        y[y >= self.circumference] = 0.0
        pos = np.searchsorted(self._left, y, side="right") - 1
        in_gap = y <= self._right[pos]
        return y, pos, in_gap

    def _map_reduced(self, y, k, sign):
        y, pos, in_gap = self._split(y)
        tpos, tlen, where = self._targets[k, sign]
        out = np.empty_like(y)
        g = np.flatnonzero(in_gap)
        if g.size:
            p = pos[g]
            t = np.clip((y[g] - self._left[p]) / self._len[p], 0.0, 1.0)
            t_out, _ = _local_map(t, tlen[p] / self._len[p])
            tp = tpos[p]
            inside = tp >= 0
            res = where[p].copy()
            res[inside] = self._left[tp[inside]] + t_out[inside] * self._len[tp[inside]]
            out[g] = res
        c = np.flatnonzero(~in_gap)
        if c.size:
            theta = y[c] - self._cumlen[pos[c] + 1] + sign * self.rhos[k - 1]
            theta = np.mod(theta, 1.0)
            theta[theta >= 1.0] = 0.0
            out[c] = self._realize_theta(theta, Side.RIGHT)
        return y, out

    def lift(self, y, k: int, sign: int = 1):
        """Lift of the realized ``f_k^sign`` to the real line (vectorized).

        Gaps whose image lies outside the window are collapsed to the image
        orbit point, so the realized map is monotone but not injective there.
        """
        check_generator(k, self.d)
        scalar = np.ndim(y) == 0
        y = np.atleast_1d(np.asarray(y, dtype=float))
        reduced, image = self._map_reduced(y, k, sign)
        out = y + np.mod(image - reduced, self.circumference)
        return float(out[0]) if scalar else out

    def lift_derivative(self, y, k: int, sign: int = 1):
        """Derivative of ``f_k^sign`` at realized points, evaluated symbolically."""
        return np.exp(self.log_derivative(y, k, sign))

    def log_derivative(self, y, k: int, sign: int = 1):
        check_generator(k, self.d)
        scalar = np.ndim(y) == 0
        y, pos, in_gap = self._split(np.atleast_1d(y))
        _, tlen, _ = self._targets[k, sign]
        out = np.zeros_like(y)
        g = np.flatnonzero(in_gap)
        if g.size:
            p = pos[g]
            t = np.clip((y[g] - self._left[p]) / self._len[p], 0.0, 1.0)
            s = np.minimum(t, 1.0 - t)
            ratio = tlen[p] / self._len[p]
            sn = np.sin(np.pi * s)
            cs = np.cos(np.pi * s)
            out[g] = 2.0 * np.log(ratio) - np.log(sn * sn + ratio * ratio * cs * cs)
        return float(out[0]) if scalar else out


def holder_estimate(system, k: int, tau: float, n_samples: int = 10_000, *,
                    sign: int = 1, seed: int = 0, chunk: int = 1024) -> float:
    """Empirical tau-Hölder constant of ``log (f_k^sign)'`` on the realized circle.

    Pairs are drawn in fixed-size chunks from ``(seed, chunk number)`` so the
    sample for ``n`` pairs is a prefix of the sample for any larger ``n``; the
    estimate is therefore non-decreasing in ``n_samples``.  Three strata are
    interleaved: both points in one gap, a gap point against a point a dyadic
    distance away, and uniform points at dyadic distances.
    """
    if not (0.0 < tau <= 1.0):
        raise DomainError("Hölder exponent must be in (0, 1]")
    L = system.circumference
    has_gaps = hasattr(system, "realized_gaps")
    if has_gaps:
        gaps = system.realized_gaps()
        weights = (gaps[:, 1] - gaps[:, 0]) / np.sum(gaps[:, 1] - gaps[:, 0])
    best = 0.0
    done = 0
    block = 0
    while done < n_samples:
        m = min(chunk, n_samples - done)
        rng = np.random.default_rng([seed, block])
        # always draw a full chunk so shorter runs see a prefix of longer ones
        stratum = (np.arange(done, done + chunk) % 3)[:m]
        u = rng.random((chunk, 4))[:m]
        jumps = (2.0 ** -rng.integers(1, 48, size=chunk))[:m]
        y1 = u[:, 0] * L
        y2 = np.mod(y1 + jumps * L * np.where(u[:, 3] < 0.5, 1.0, -1.0), L)
        if has_gaps:
            pick = rng.choice(len(gaps), size=chunk, p=weights)[:m]
            lo, hi = gaps[pick, 0], gaps[pick, 1]
            inside1 = lo + u[:, 1] * (hi - lo)
            inside2 = lo + u[:, 2] * (hi - lo)
            y1 = np.where(stratum == 2, y1, inside1)
            y2 = np.where(stratum == 0, inside2, y2)
            y2 = np.where(stratum == 1, np.mod(inside1 + jumps * L, L), y2)
        y1 = np.mod(y1, L)
        y2 = np.mod(y2, L)
        dist = cyclic_distance(y1, y2, L)
        ok = dist > 0
        if np.any(ok):
            diff = np.abs(system.log_derivative(y1[ok], k, sign) - system.log_derivative(y2[ok], k, sign))
            best = max(best, float(np.max(diff / dist[ok] ** tau)))
        done += m
        block += 1
    return best
