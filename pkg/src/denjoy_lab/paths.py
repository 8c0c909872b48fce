"""Lattice-path selection over multi-indexed weights.

Given positive weights ``l_i`` on a box of ``Z^d`` with total mass at most 1,
the engine grows nested corner rectangles ``R_m``, picks in each one a line in
direction ``s(m)`` whose ``tau_{s(m)}``-power sum is small, chains the lines so
that consecutive ones meet, and walks along the chain.  The resulting unit-step
path has ``sum l(p_n)^tau_{alpha(n)}`` bounded independently of its length
when ``sum(taus) > 1``.

Indices here are 0-based array positions; generator directions are 1-based.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .circle import HolderParams, Letter, Regime, Word
from .errors import (
    CapacityError,
    ChainNotFound,
    DomainError,
    InvariantViolation,
    PreconditionError,
    RegimeError,
)

MAX_ORACLE_CELLS = 10**6
_MASS_SLACK = 1e-12


class WeightGrid:
    """Dense positive weights indexed by ``[0, dims_1) x ... x [0, dims_d)``."""

    def __init__(self, values):
        values = np.array(values, dtype=float)
        if values.ndim < 1 or values.size == 0:
            raise DomainError("weight grid is empty")
        if not np.all(np.isfinite(values)) or np.any(values <= 0):
            raise DomainError("weights must be finite and strictly positive")
        values.setflags(write=False)
        self.values = values
        self.total = math.fsum(values.ravel())

    @property
    def dims(self) -> Tuple[int, ...]:
        return tuple(self.values.shape)

    @property
    def d(self) -> int:
        return self.values.ndim

    def __getitem__(self, idx):
        return float(self.values[tuple(idx)])

    def __call__(self, idx) -> float:
        return self[idx]

    @classmethod
    def from_function(cls, fn: Callable[[Tuple[int, ...]], float], dims: Sequence[int]):
        out = np.empty(tuple(dims))
        for idx in np.ndindex(*dims):
            out[idx] = fn(idx)
        return cls(out)

    def normalized(self, mass: float = 1.0) -> "WeightGrid":
        return WeightGrid(self.values * (mass / self.total))

    def require_mass(self, limit: float = 1.0) -> None:
        if self.total > limit + _MASS_SLACK:
            raise PreconditionError(f"total weight {self.total:.12g} exceeds {limit}")


def gap_length_grid(params, n: int) -> WeightGrid:
    """Gap lengths ``1 / (1 + sum i_k^(1/tau_k))`` on ``[[0, n]]^d``."""
    taus = params.taus if isinstance(params, HolderParams) else tuple(params)
    axes = np.meshgrid(*([np.arange(n + 1, dtype=float)] * len(taus)), indexing="ij")
    denom = np.ones_like(axes[0])
    for a, t in zip(axes, taus):
        denom += a ** (1.0 / t)
    return WeightGrid(1.0 / denom)


def _require_2d(grid: WeightGrid) -> None:
    if grid.d != 2:
        raise DomainError(f"expected a 2-d grid, got {grid.d} dimensions")


def _check_tau(tau: float) -> None:
    if not 0.0 < tau < 1.0:
        raise DomainError(f"tau={tau!r} not in (0, 1)")


def column_sums(grid: WeightGrid, tau: float) -> np.ndarray:
    """``sum_i l_{i,k}^tau`` for each column ``k`` (rows are the first axis)."""
    return np.sum(grid.values ** tau, axis=0)


def column_bound(grid: WeightGrid, tau: float) -> float:
    m, n = grid.dims
    return m ** (1.0 - tau) / n ** tau


def select_best_column(grid: WeightGrid, tau: float) -> Tuple[int, float]:
    """Column with the smallest ``tau``-power sum; ties go to the smaller index."""
    _require_2d(grid)
    _check_tau(tau)
    grid.require_mass()
    sums = column_sums(grid, tau)
    k = int(np.argmin(sums))
    return k, float(sums[k])


def good_columns(grid: WeightGrid, tau: float, A: float) -> List[int]:
    """Columns whose sum is at most ``A`` times the mean bound ``m^(1-tau)/n^tau``."""
    _require_2d(grid)
    _check_tau(tau)
    if not A > 1.0:
        raise DomainError(f"A={A!r} must exceed 1")
    grid.require_mass()
    sums = column_sums(grid, tau)
    return [int(k) for k in np.flatnonzero(sums <= A * column_bound(grid, tau))]


def stage_direction(m: int, d: int) -> int:
    """``s(m)``: the coordinate (1-based) that grows at stage ``m``."""
    return (m - 1) % d + 1


@dataclass(frozen=True)
class RectangleSchedule:
    """Corner rectangles ``R_m = prod_k [[0, x[k-1, m]]]`` for ``m = 0..M0``.

    ``A[m-1]`` is the Chebyshev factor ``A_m`` used at stage ``m``.
    """

    x: np.ndarray  # shape (d, M0 + 1)
    A: Tuple[float, ...]

    def __post_init__(self):
        x = np.array(self.x, dtype=np.int64)
        if x.ndim != 2 or x.shape[1] < 2:
            raise PreconditionError("schedule needs at least one stage")
        d, cols = x.shape
        if d < 2:
            raise PreconditionError("line chaining needs d >= 2")
        A = tuple(float(a) for a in self.A)
        if len(A) != cols - 1:
            raise PreconditionError(f"expected {cols - 1} factors A_m, got {len(A)}")
        if np.any(x[:, 0] != 0):
            raise PreconditionError("R_0 must be the origin")
        for m in range(1, cols):
            s = stage_direction(m, d)
            for k in range(1, d + 1):
                prev, cur = x[k - 1, m - 1], x[k - 1, m]
                if k == s and not cur > prev:
                    raise PreconditionError(f"x[{k},{m}] must grow at stage {m}")
                if k != s and cur != prev:
                    raise PreconditionError(f"x[{k},{m}] may only change when s(m) = {k}")
        if any(not a > 1.0 for a in A):
            raise PreconditionError("every A_m must exceed 1")
        if math.fsum(1.0 / a for a in A) >= 1.0:
            raise PreconditionError("sum of 1/A_m must be < 1")
        x.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "A", A)

    @classmethod
    def from_corners(cls, corners: Sequence[Sequence[int]], A: Sequence[float]):
        """Build from the far corners of ``R_0, ..., R_M0``."""
        return cls(np.array(corners, dtype=np.int64).T, tuple(A))

    @property
    def d(self) -> int:
        return self.x.shape[0]

    @property
    def M0(self) -> int:
        return self.x.shape[1] - 1

    @property
    def X(self) -> np.ndarray:
        return self.x + 1

    def s(self, m: int) -> int:
        return stage_direction(m, self.d)

    def corner(self, m: int) -> Tuple[int, ...]:
        return tuple(int(v) for v in self.x[:, m])

    def A_m(self, m: int) -> float:
        return self.A[m - 1]

    def stage_bound(self, m: int, params) -> float:
        """``A_m X_s^(1-tau_s) / prod_{j != s} X_j^tau_s`` with ``s = s(m)``."""
        taus = _taus(params)
        s = self.s(m)
        t = taus[s - 1]
        X = self.X[:, m].astype(float)
        denom = math.prod(X[j] ** t for j in range(self.d) if j != s - 1)
        return float(self.A_m(m) * X[s - 1] ** (1.0 - t) / denom)


def _taus(params) -> Tuple[float, ...]:
    return params.taus if isinstance(params, HolderParams) else tuple(float(t) for t in params)


def _a_factors(eps: float, taus: Sequence[float], d: int, M0: int, base: float) -> List[float]:
    return [base * 2.0 ** (eps * m * taus[stage_direction(m, d) - 1] / 2.0)
            for m in range(1, M0 + 1)]


def build_schedule(params: HolderParams, M0: int, A_base: Optional[float] = None,
                   growth_base: Optional[float] = None) -> RectangleSchedule:
    """Corner schedule with ``X_{k,m}`` of order ``2^(m tau_k)``.

    At stage ``m`` coordinate ``s(m)`` jumps to
    ``max(x + 1, floor(growth_base^(ceil(m/d) tau_k)))``.  ``growth_base``
    defaults to ``2**d`` so that each coordinate grows by ``2^(d tau_k)`` per
    cycle of ``d`` stages.  Without ``A_base`` the factor is doubled from 2
    until ``sum 1/A_m < 1``.
    """
    if not isinstance(params, HolderParams):
        params = HolderParams(tuple(params))
    if params.regime is not Regime.SUPERCRITICAL:
        raise RegimeError(f"sum of exponents is {params.total:.6g} <= 1; path bounds need sum > 1")
    if M0 < 1:
        raise DomainError("M0 must be at least 1")
    d = params.d
    if d < 2:
        raise DomainError("line chaining needs d >= 2")
    base = float(2 ** d if growth_base is None else growth_base)
    if not base > 1.0:
        raise DomainError("growth_base must exceed 1")
    x = np.zeros((d, M0 + 1), dtype=np.int64)
    for m in range(1, M0 + 1):
        x[:, m] = x[:, m - 1]
        k = stage_direction(m, d)
        target = math.floor(base ** (math.ceil(m / d) * params.tau(k)))
        x[k - 1, m] = max(x[k - 1, m - 1] + 1, target)
    eps = params.epsilon
    if A_base is None:
        A_base = 2.0
        while math.fsum(1.0 / a for a in _a_factors(eps, params.taus, d, M0, A_base)) >= 1.0:
            A_base *= 2.0
    return RectangleSchedule(x, tuple(_a_factors(eps, params.taus, d, M0, float(A_base))))


class Line(NamedTuple):
    """All points of ``R_m`` agreeing with ``anchor`` off coordinate ``direction``.

    ``anchor[direction - 1]`` is always 0.
    """

    direction: int
    anchor: Tuple[int, ...]

    def point(self, coord: int) -> Tuple[int, ...]:
        p = list(self.anchor)
        p[self.direction - 1] = coord
        return tuple(p)


def _require_cover(grid: WeightGrid, schedule: RectangleSchedule) -> None:
    if grid.d != schedule.d:
        raise DomainError(f"grid has d={grid.d}, schedule has d={schedule.d}")
    corner = schedule.corner(schedule.M0)
    if any(c >= n for c, n in zip(corner, grid.dims)):
        raise PreconditionError(f"grid of shape {grid.dims} does not cover R_M0 = {corner}")


def line_sums(grid: WeightGrid, schedule: RectangleSchedule, m: int, params) -> Tuple[np.ndarray, float]:
    """Power sums of all stage-``m`` lines, shaped like the face ``F_m``, and the bound."""
    if not 1 <= m <= schedule.M0:
        raise DomainError(f"stage {m} out of range 1..{schedule.M0}")
    _require_cover(grid, schedule)
    s = schedule.s(m)
    t = _taus(params)[s - 1]
    box = tuple(slice(0, c + 1) for c in schedule.corner(m))
    sums = np.sum(grid.values[box] ** t, axis=s - 1, keepdims=True)
    return sums, schedule.stage_bound(m, params)


def good_lines(grid: WeightGrid, schedule: RectangleSchedule, m: int, params) -> List[Line]:
    """Stage-``m`` lines whose power sum meets the Chebyshev bound, sorted by anchor."""
    grid.require_mass()
    sums, bound = line_sums(grid, schedule, m, params)
    s = schedule.s(m)
    return [Line(s, tuple(int(v) for v in a)) for a in np.argwhere(sums <= bound)]


def all_lines(schedule: RectangleSchedule, m: int) -> List[Line]:
    s = schedule.s(m)
    dims = [c + 1 for c in schedule.corner(m)]
    dims[s - 1] = 1
    return [Line(s, tuple(a)) for a in np.ndindex(*dims)]


@dataclass(frozen=True)
class Chain:
    lines: Tuple[Line, ...]
    proportions: Tuple[float, ...]  # P_0 = 1, P_1, ..., P_M0


def _zeroed(anchor: Tuple[int, ...], k: int) -> Tuple[int, ...]:
    out = list(anchor)
    out[k - 1] = 0
    return tuple(out)


def _face_size(schedule: RectangleSchedule, m: int) -> int:
    # C_m: points of R_m with coordinates s(m) and s(m)+1 set to zero
    d = schedule.d
    s = schedule.s(m)
    skip = {s, s % d + 1}
    return math.prod(int(schedule.x[k - 1, m]) + 1 for k in range(1, d + 1) if k not in skip)


def chain_from_line_sets(schedule: RectangleSchedule,
                         line_sets: Dict[int, Iterable[Line]]) -> Chain:
    """Chain lines ``L_m in line_sets[m]`` with consecutive lines intersecting.

    Forward pass over admissible points of the faces ``C_m``: a line of stage
    ``m`` continues a chain when its projection onto ``C_{m-1}`` is admissible.
    Each admissible point keeps the smallest line reaching it; the last line is
    the smallest extendable one.
    """
    d = schedule.d
    origin = (0,) * d
    admissible: List[Dict[Tuple[int, ...], Line]] = [{origin: Line(d, origin)}]
    proportions = [1.0]
    for m in range(1, schedule.M0 + 1):
        s = schedule.s(m)
        prev_s = schedule.s(m - 1) if m > 1 else d
        nxt = s % d + 1
        reached: Dict[Tuple[int, ...], Line] = {}
        for line in sorted(line_sets.get(m, ())):
            if line.direction != s:
                raise DomainError(f"stage {m} lines must run in direction {s}")
            if _zeroed(line.anchor, prev_s) in admissible[-1]:
                reached.setdefault(_zeroed(line.anchor, nxt), line)
        proportions.append(len(reached) / _face_size(schedule, m))
        if not reached:
            raise ChainNotFound(
                f"no admissible point left at stage {m}; proportions so far {proportions}")
        admissible.append(reached)
    last = min(admissible[-1].values())
    lines = [last]
    for m in range(schedule.M0 - 1, 0, -1):
        lines.append(admissible[m][_zeroed(lines[-1].anchor, schedule.s(m))])
    return Chain(tuple(reversed(lines)), tuple(proportions))


def admissible_chain(grid: WeightGrid, schedule: RectangleSchedule, params) -> Chain:
    _require_cover(grid, schedule)
    grid.require_mass()
    sets = {m: good_lines(grid, schedule, m, params) for m in range(1, schedule.M0 + 1)}
    return chain_from_line_sets(schedule, sets)


@dataclass(frozen=True)
class LatticePath:
    points: Tuple[Tuple[int, ...], ...]
    alphas: Tuple[int, ...]
    signs: Tuple[int, ...]
    chosen_lines: Tuple[Line, ...] = ()

    def __len__(self) -> int:
        return len(self.alphas)

    @property
    def end(self) -> Tuple[int, ...]:
        return self.points[-1]

    def word(self) -> Word:
        return tuple(Letter(a, s) for a, s in zip(self.alphas, self.signs))


def _walk(points: list, alphas: list, signs: list, target: Tuple[int, ...], k: int) -> None:
    cur = points[-1]
    if any(c != t for j, (c, t) in enumerate(zip(cur, target)) if j != k - 1):
        raise InvariantViolation(f"cannot reach {target} from {cur} along direction {k}")
    step = 1 if target[k - 1] > cur[k - 1] else -1
    p = list(cur)
    while p[k - 1] != target[k - 1]:
        p[k - 1] += step
        points.append(tuple(p))
        alphas.append(k)
        signs.append(step)


def extract_path(chain, schedule: RectangleSchedule) -> LatticePath:
    """Walk ``L_1`` from the origin, switch lines at each intersection, and run
    along ``L_M0`` to the far face ``x_{s(M0)} = x_{s(M0), M0}``."""
    lines = tuple(chain.lines if isinstance(chain, Chain) else chain)
    if len(lines) != schedule.M0:
        raise DomainError(f"chain has {len(lines)} lines, schedule has {schedule.M0} stages")
    d = schedule.d
    points = [(0,) * d]
    alphas: List[int] = []
    signs: List[int] = []
    for m, line in enumerate(lines, start=1):
        s = line.direction
        if m < len(lines):
            nxt = lines[m]
            target = line.point(nxt.anchor[s - 1])
            # target must also lie on the next line
            if _zeroed(target, nxt.direction) != nxt.anchor:
                raise InvariantViolation(f"lines {m} and {m + 1} do not intersect")
        else:
            target = line.point(int(schedule.x[s - 1, m]))
        _walk(points, alphas, signs, target, s)
    return LatticePath(tuple(points), tuple(alphas), tuple(signs), lines)


def terminal_run(path: LatticePath) -> int:
    """Length of the final run of identical steps."""
    if not path.alphas:
        return 0
    last = (path.alphas[-1], path.signs[-1])
    n = 0
    for step in zip(reversed(path.alphas), reversed(path.signs)):
        if step != last:
            break
        n += 1
    return n


def path_weight(weights, path: LatticePath, params) -> float:
    """``sum_n weights(p_n)^tau_{alpha(n)}`` over every point that starts a step."""
    taus = _taus(params)
    fn = weights.__getitem__ if isinstance(weights, WeightGrid) else weights
    terms = []
    for p, a in zip(path.points, path.alphas):
        w = float(fn(p))
        if not w > 0.0:
            raise DomainError(f"weight at {p} is not positive: {w!r}")
        terms.append(w ** taus[a - 1])
    return math.fsum(terms)


class PathBound(NamedTuple):
    stagewise: float
    stage_terms: Tuple[float, ...]
    C_prime: float  # max over stages of (stage ratio) / 2^(-eps m tau_s)
    envelope: float  # A_base * C' * r / (1 - r), r = 2^(-eps tau' / 2)


def theoretical_S(params: HolderParams, schedule: RectangleSchedule) -> PathBound:
    if not isinstance(params, HolderParams):
        params = HolderParams(tuple(params))
    if params.regime is not Regime.SUPERCRITICAL:
        raise RegimeError("path bounds need sum(taus) > 1")
    eps = params.epsilon
    terms = []
    c_prime = 0.0
    a_base = math.inf
    for m in range(1, schedule.M0 + 1):
        term = schedule.stage_bound(m, params)
        terms.append(term)
        t = params.tau(schedule.s(m))
        c_prime = max(c_prime, (term / schedule.A_m(m)) / 2.0 ** (-eps * m * t))
        a_base = min(a_base, schedule.A_m(m) / 2.0 ** (eps * m * t / 2.0))
    r = 2.0 ** (-eps * params.tau_min / 2.0)
    return PathBound(math.fsum(terms), tuple(terms), float(c_prime),
                     float(a_base * c_prime * r / (1.0 - r)))


def oracle_min_path(grid: WeightGrid, params) -> Tuple[float, LatticePath]:
    """Exact minimum weight over monotone paths from the origin to the far corner."""
    _require_2d(grid)
    if grid.values.size > MAX_ORACLE_CELLS:
        raise CapacityError(f"{grid.values.size} cells exceed the oracle limit {MAX_ORACLE_CELLS}")
    t1, t2 = _taus(params)[:2]
    w1 = grid.values ** t1
    w2 = grid.values ** t2
    rows, cols = grid.dims
    cost = np.full((rows + 1, cols + 1), math.inf)
    cost[rows - 1, cols - 1] = 0.0
    move = np.zeros((rows, cols), dtype=np.int8)
    for i in range(rows - 1, -1, -1):
        for j in range(cols - 1, -1, -1):
            if i == rows - 1 and j == cols - 1:
                continue
            a = w1[i, j] + cost[i + 1, j]
            b = w2[i, j] + cost[i, j + 1]
            if a <= b:
                cost[i, j], move[i, j] = a, 1
            else:
                cost[i, j], move[i, j] = b, 2
    points = [(0, 0)]
    alphas = []
    while points[-1] != (rows - 1, cols - 1):
        i, j = points[-1]
        k = int(move[i, j])
        alphas.append(k)
        points.append((i + 1, j) if k == 1 else (i, j + 1))
    path = LatticePath(tuple(points), tuple(alphas), (1,) * len(alphas))
    # report the weight re-summed along the path so it matches path_weight exactly
    return path_weight(grid, path, params), path


def read_grid_csv(text: str) -> WeightGrid:
    """Parse ``i1,...,id,value`` rows; every cell of the bounding box must appear once."""
    import csv
    import io

    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise DomainError("empty grid CSV")
    header = [h.strip() for h in rows[0]]
    d = len(header) - 1
    if d < 1 or header != [f"i{k}" for k in range(1, d + 1)] + ["value"]:
        raise DomainError(f"bad grid header {rows[0]!r}")
    cells = {}
    for n, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != d + 1:
            raise DomainError(f"row {n}: expected {d + 1} fields")
        try:
            idx = tuple(int(v) for v in row[:d])
            val = float(row[d])
        except ValueError as exc:
            raise DomainError(f"row {n}: {exc}") from None
        if idx in cells:
            raise DomainError(f"row {n}: duplicate cell {idx}")
        if min(idx) < 0:
            raise DomainError(f"row {n}: negative index {idx}")
        cells[idx] = val
    if not cells:
        raise DomainError("grid CSV has no cells")
    dims = tuple(max(idx[k] for idx in cells) + 1 for k in range(d))
    if len(cells) != math.prod(dims):
        raise DomainError(f"grid CSV does not fill a {dims} box")
    values = np.empty(dims)
    for idx, v in cells.items():
        values[idx] = v
    return WeightGrid(values)


def grid_csv_rows(grid: WeightGrid) -> Tuple[List[str], List[list]]:
    header = [f"i{k}" for k in range(1, grid.d + 1)] + ["value"]
    rows = [list(idx) + [float(grid.values[idx])] for idx in np.ndindex(*grid.dims)]
    return header, rows


def schedule_csv_rows(schedule: RectangleSchedule) -> Tuple[List[str], List[list]]:
    """One row per stage and coordinate: ``m,k,x_km,A_m`` (``A_0`` is written as 0)."""
    rows = []
    for m in range(schedule.M0 + 1):
        a = schedule.A_m(m) if m else 0.0
        for k in range(1, schedule.d + 1):
            rows.append([m, k, int(schedule.x[k - 1, m]), a])
    return ["m", "k", "x_km", "A_m"], rows
