import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from denjoy_lab.circle import HolderParams
from denjoy_lab.errors import (CapacityError, ChainNotFound, DomainError, InvariantViolation,
                               PreconditionError, RegimeError)
from denjoy_lab.paths import (
    Line,
    RectangleSchedule,
    WeightGrid,
    admissible_chain,
    all_lines,
    build_schedule,
    chain_from_line_sets,
    column_bound,
    extract_path,
    gap_length_grid,
    good_columns,
    good_lines,
    grid_csv_rows,
    oracle_min_path,
    path_weight,
    read_grid_csv,
    schedule_csv_rows,
    select_best_column,
    terminal_run,
    theoretical_S,
)
from denjoy_lab.reporting import csv_text

import oracles

SUPER = HolderParams((0.6, 0.55))


def random_grid(rng, dims, sigma=1.5, mass=1.0):
    return WeightGrid(rng.lognormal(0.0, sigma, size=dims)).normalized(mass)


grids_2d = st.tuples(st.integers(1, 8), st.integers(1, 8), st.integers(0, 2**32 - 1)).map(
    lambda a: random_grid(np.random.default_rng(a[2]), (a[0], a[1])))


# -- columns ----------------------------------------------------------------

def test_uniform_grid_saturates_bound():
    m, n, tau = 3, 5, 0.5
    g = WeightGrid(np.full((m, n), 1 / (m * n)))
    k, s = select_best_column(g, tau)
    assert k == 0
    assert s == pytest.approx(m ** (1 - tau) / n ** tau, rel=1e-12)
    assert good_columns(g, tau, 1.01) == list(range(n))


def test_two_by_two_example():
    g = WeightGrid([[0.5, 0.1], [0.1, 0.3]])
    sums = [math.sqrt(0.5) + math.sqrt(0.1), math.sqrt(0.1) + math.sqrt(0.3)]
    k, s = select_best_column(g, 0.5)
    assert k == 1 and s == pytest.approx(sums[1], abs=1e-15)
    assert sums[0] == pytest.approx(1.0233, abs=1e-4) and sums[1] == pytest.approx(0.8639, abs=1e-4)


def test_column_preconditions():
    with pytest.raises(PreconditionError):
        select_best_column(WeightGrid([[0.9, 0.9]]), 0.5)
    with pytest.raises(DomainError):
        select_best_column(WeightGrid([[0.1]]), 1.0)
    with pytest.raises(DomainError):
        WeightGrid(np.zeros((0, 3)))
    with pytest.raises(DomainError):
        WeightGrid([[0.1, 0.0]])
    with pytest.raises(DomainError):
        good_columns(WeightGrid([[0.1]]), 0.5, 1.0)


def test_heavy_column():
    n = 7
    v = np.full((4, n), 1e-4)
    v[:, 3] = 0.2
    g = WeightGrid(v).normalized()
    assert len(good_columns(g, 0.5, 2.0)) >= math.ceil(n / 2)


@settings(max_examples=300)
@given(grids_2d, st.sampled_from([0.3, 0.5, 0.7]))
def test_min_column_under_mean_bound(g, tau):
    k, s = select_best_column(g, tau)
    col = [sum(float(g.values[i, j]) ** tau for i in range(g.dims[0])) for j in range(g.dims[1])]
    assert s == pytest.approx(min(col), rel=1e-12)
    assert k == col.index(min(col))
    assert s <= sum(col) / len(col) + 1e-12
    assert s <= column_bound(g, tau) + 1e-12


@settings(max_examples=300)
@given(grids_2d, st.sampled_from([0.3, 0.5, 0.7]), st.sampled_from([1.5, 2.0, 4.0]))
def test_good_column_proportion(g, tau, A):
    good = good_columns(g, tau, A)
    assert len(good) >= (1 - 1 / A) * g.dims[1]


# -- schedules --------------------------------------------------------------

def test_build_schedule_shape():
    sch = build_schedule(SUPER, 12)
    assert np.all(sch.x[:, 0] == 0)
    assert math.fsum(1 / a for a in sch.A) < 1
    for m in range(1, 13):
        for k in (1, 2):
            ratio = sch.X[k - 1, m] / 2 ** (m * SUPER.tau(k))
            assert 1 / 4 <= ratio <= 4


def test_build_schedule_a_factors():
    sch = build_schedule(SUPER, 8)
    eps = SUPER.epsilon
    base = sch.A[0] / 2 ** (eps * 1 * 0.6 / 2)
    assert base == 8.0  # doubled from 2 until the reciprocal sum drops below 1
    for m in range(1, 9):
        t = SUPER.tau(sch.s(m))
        assert sch.A_m(m) == pytest.approx(base * 2 ** (eps * m * t / 2), rel=1e-15)


def test_build_schedule_errors():
    with pytest.raises(RegimeError):
        build_schedule((0.4, 0.35), 3)
    with pytest.raises(DomainError):
        build_schedule(SUPER, 0)
    with pytest.raises(PreconditionError):
        build_schedule(SUPER, 8, A_base=1.5)


def test_schedule_invariants_checked():
    with pytest.raises(PreconditionError):
        RectangleSchedule.from_corners([(0, 0), (0, 1)], [3.0])  # wrong coordinate grows
    with pytest.raises(PreconditionError):
        RectangleSchedule.from_corners([(0, 0), (2, 0), (2, 1)], [1.5, 1.5])
    with pytest.raises(PreconditionError):
        RectangleSchedule.from_corners([(1, 0), (2, 0)], [3.0])
    sch = RectangleSchedule.from_corners([(0, 0), (2, 0), (2, 1)], [3.0, 3.0])
    assert sch.M0 == 2 and sch.corner(2) == (2, 1)


def test_schedule_csv_rows():
    header, rows = schedule_csv_rows(build_schedule(SUPER, 3))
    assert header == ["m", "k", "x_km", "A_m"]
    assert len(rows) == 4 * 2 and rows[0][:3] == [0, 1, 0]


# -- lines and chains -------------------------------------------------------

def test_uniform_weights_all_lines_good_and_first_choice():
    sch = build_schedule(SUPER, 6)
    dims = [c + 1 for c in sch.corner(6)]
    g = WeightGrid(np.full(dims, 1 / math.prod(dims)))
    for m in range(1, 7):
        assert good_lines(g, sch, m, SUPER) == all_lines(sch, m)
    chain = admissible_chain(g, sch, SUPER)
    assert all(line.anchor == (0, 0) for line in chain.lines)


def test_good_lines_match_bruteforce_and_columns():
    rng = np.random.default_rng(0)
    for _ in range(100):
        sch = RectangleSchedule.from_corners([(0, 0), (3, 0), (3, 4), (6, 4)], [3.5, 3.5, 3.5])
        g = random_grid(rng, (7, 5), sigma=2.0)
        for m in (1, 2, 3):
            got = [line.anchor for line in good_lines(g, sch, m, SUPER)]
            s = sch.s(m)
            want = oracles.good_anchors(g.values, sch.corner(m), s, SUPER.taus, sch.A_m(m))
            assert got == want
            total = len(all_lines(sch, m))
            assert len(got) >= (1 - 1 / sch.A_m(m)) * total or g.total > 1
        # d = 2: direction-2 lines of R_2 are the columns of its transpose
        sub = WeightGrid(g.values[:4, :5].T)
        if sub.total <= 1:
            cols = good_columns(sub, SUPER.tau(2), 3.5)
            assert [line.anchor[0] for line in good_lines(g, sch, 2, SUPER)] == cols


def random_schedule_3d(rng, max_side=5):
    M0 = int(rng.integers(3, 8))
    x = [0, 0, 0]
    corners = [tuple(x)]
    for m in range(1, M0 + 1):
        k = (m - 1) % 3
        room = max_side - x[k]
        left = sum(1 for mm in range(m + 1, M0 + 1) if (mm - 1) % 3 == k)
        step = int(rng.integers(1, max(1, room - left) + 1))
        x[k] += step
        corners.append(tuple(x))
    return RectangleSchedule.from_corners(corners, [M0 + 0.25] * M0)


def stages_for(sch, sets):
    return [(sch.s(m), sch.corner(m)[sch.s(m) - 1], [l.anchor for l in sets[m]])
            for m in range(1, sch.M0 + 1)]


def check_chain(chain, sch, sets):
    lines = chain.lines
    assert len(lines) == sch.M0
    prev = frozenset([(0, 0, 0)])
    for m, line in enumerate(lines, start=1):
        assert line in sets[m]
        pts = oracles.line_points(line.direction, line.anchor, sch.corner(m)[line.direction - 1])
        assert prev & pts
        prev = pts
    bound = 1.0
    for m in range(1, sch.M0 + 1):
        bound -= 1 / sch.A_m(m)
        assert chain.proportions[m] >= bound - 1e-12


def test_chain_three_dims_against_bruteforce():
    rng = np.random.default_rng(17)
    P3 = HolderParams((0.5, 0.45, 0.4))
    for _ in range(100):
        sch = random_schedule_3d(rng)
        g = random_grid(rng, [c + 1 for c in sch.corner(sch.M0)], sigma=2.5)
        sets = {m: good_lines(g, sch, m, P3) for m in range(1, sch.M0 + 1)}
        for m, lines in sets.items():
            assert len(lines) >= (1 - 1 / sch.A_m(m)) * len(all_lines(sch, m))
        chain = admissible_chain(g, sch, P3)
        check_chain(chain, sch, sets)
        assert oracles.find_chain(stages_for(sch, sets)) is not None


def test_chain_core_on_adversarial_line_sets():
    # drop as many lines as the proportion rule allows, at random
    rng = np.random.default_rng(5)
    for _ in range(100):
        sch = random_schedule_3d(rng)
        sets = {}
        for m in range(1, sch.M0 + 1):
            lines = all_lines(sch, m)
            drop = int(math.floor(len(lines) / sch.A_m(m)))
            keep = rng.permutation(len(lines))[drop:]
            sets[m] = [lines[i] for i in sorted(keep)]
        chain = chain_from_line_sets(sch, sets)
        check_chain(chain, sch, sets)
        assert oracles.find_chain(stages_for(sch, sets)) is not None


def test_chain_not_found_when_sets_empty():
    sch = RectangleSchedule.from_corners([(0, 0), (2, 0), (2, 2)], [3.0, 3.0])
    with pytest.raises(ChainNotFound):
        chain_from_line_sets(sch, {1: all_lines(sch, 1), 2: []})


def test_chain_core_matches_bruteforce_on_sparse_sets():
    # below the proportion threshold a chain may or may not exist; both must agree
    rng = np.random.default_rng(23)
    for _ in range(200):
        sch = random_schedule_3d(rng, max_side=3)
        sets = {}
        for m in range(1, sch.M0 + 1):
            lines = all_lines(sch, m)
            sets[m] = [l for l in lines if rng.random() < 0.35]
        expected = oracles.find_chain(stages_for(sch, sets))
        try:
            chain = chain_from_line_sets(sch, sets)
        except ChainNotFound:
            assert expected is None
        else:
            assert expected is not None
            prev = frozenset([(0, 0, 0)])
            for m, line in enumerate(chain.lines, start=1):
                pts = oracles.line_points(line.direction, line.anchor, sch.corner(m)[line.direction - 1])
                assert line in sets[m] and prev & pts
                prev = pts


# -- paths --------------------------------------------------------------------

def test_single_stage_path():
    sch = RectangleSchedule.from_corners([(0, 0), (4, 0)], [2.0])
    path = extract_path([Line(1, (0, 0))], sch)
    assert path.points == ((0, 0), (1, 0), (2, 0), (3, 0), (4, 0))
    assert path.alphas == (1,) * 4 and path.signs == (1,) * 4
    assert terminal_run(path) == 4


def test_extract_path_rejects_disjoint_lines():
    sch = RectangleSchedule.from_corners([(0, 0, 0), (2, 0, 0), (2, 2, 0), (2, 2, 2)], [4.0] * 3)
    with pytest.raises(InvariantViolation):
        extract_path([Line(1, (0, 0, 0)), Line(2, (1, 0, 1)), Line(3, (1, 1, 0))], sch)


def test_path_steps_may_go_backwards():
    sch = RectangleSchedule.from_corners([(0, 0), (3, 0), (3, 2), (5, 2)], [4.0] * 3)
    path = extract_path([Line(1, (0, 0)), Line(2, (3, 0)), Line(1, (0, 2))], sch)
    assert path.end == (5, 2)
    assert -1 not in path.signs
    path = extract_path([Line(1, (0, 0)), Line(2, (1, 0)), Line(1, (0, 1))], sch)
    assert path.points[:3] == ((0, 0), (1, 0), (1, 1))
    assert path.end == (5, 1)


def test_path_weight_examples():
    sch = RectangleSchedule.from_corners([(0, 0), (1, 0)], [2.0])
    path = extract_path([Line(1, (0, 0))], sch)
    assert path_weight(lambda p: 0.25, path, (0.5, 0.3)) == 0.5
    c, tau, n = 0.01, 0.6, 5
    sch = RectangleSchedule.from_corners([(0, 0), (n, 0)], [2.0])
    path = extract_path([Line(1, (0, 0))], sch)
    assert path_weight(lambda p: c, path, (tau, tau)) == pytest.approx(n * c ** tau, rel=1e-15)
    with pytest.raises(DomainError):
        path_weight(lambda p: 0.0, path, (tau, tau))


def _summable_field(rng, dims):
    i, j = np.meshgrid(np.arange(dims[0]), np.arange(dims[1]), indexing="ij")
    a, b = rng.uniform(1.2, 3.0, 2)
    v = (1 + i) ** -a * (1 + j) ** -b * rng.uniform(0.2, 1.0, size=dims)
    return WeightGrid(v).normalized(rng.uniform(0.5, 1.0))


def test_engine_paths_under_bound():
    rng = np.random.default_rng(42)
    for M0 in (1, 2, 5, 8):
        sch = build_schedule(SUPER, M0)
        dims = [c + 1 for c in sch.corner(M0)]
        bound = theoretical_S(SUPER, sch)
        for _ in range(250):
            g = _summable_field(rng, dims) if rng.random() < 0.5 else random_grid(rng, dims, 2.0)
            path = extract_path(admissible_chain(g, sch, SUPER), sch)
            assert path_weight(g, path, SUPER) <= bound.stagewise
            s = sch.s(M0)
            assert terminal_run(path) >= sch.x[s - 1, M0] - sch.x[s - 1, M0 - 1]
            assert path.end[s - 1] == sch.x[s - 1, M0]
            assert all(0 <= c <= x for p in path.points for c, x in zip(p, sch.corner(M0)))


def test_theoretical_S_partial_sums_and_envelope():
    p = HolderParams((0.75, 0.75))
    s8 = theoretical_S(p, build_schedule(p, 8, A_base=8.0))
    s9 = theoretical_S(p, build_schedule(p, 9, A_base=8.0))
    assert s9.stage_terms[:8] == s8.stage_terms
    assert s9.stagewise == pytest.approx(s8.stagewise + s9.stage_terms[8], rel=1e-15)
    assert s8.stagewise <= s8.envelope
    r = 2 ** (-0.5 * 0.75 / 2)
    assert r == 2 ** -0.1875
    assert math.isfinite(s8.envelope)


def test_theoretical_S_refuses_subcritical():
    with pytest.raises(RegimeError):
        theoretical_S((0.4, 0.35), build_schedule(SUPER, 2))


# -- oracle minimum path ----------------------------------------------------

def test_oracle_two_by_two():
    g = WeightGrid([[0.4, 0.2], [0.1, 0.05]])
    w, path = oracle_min_path(g, (0.5, 0.5))
    assert w == pytest.approx(math.sqrt(0.4) + math.sqrt(0.1), abs=1e-15)
    assert abs(w - 0.9487) < 1e-4
    assert path.points == ((0, 0), (1, 0), (1, 1))


def test_oracle_single_row():
    g = WeightGrid([[0.1, 0.2, 0.3, 0.05]])
    w, _ = oracle_min_path(g, (0.5, 0.7))
    assert w == pytest.approx(sum(v ** 0.7 for v in (0.1, 0.2, 0.3)), rel=1e-15)


@settings(max_examples=100)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_oracle_matches_enumeration(r, c, seed):
    rng = np.random.default_rng(seed)
    g = random_grid(rng, (r, c))
    taus = (0.6, 0.45)
    w, path = oracle_min_path(g, taus)
    assert w == pytest.approx(oracles.brute_min_path(g.values.tolist(), taus), rel=1e-12)
    assert w == pytest.approx(path_weight(g, path, taus), rel=1e-15)


def test_oracle_capacity():
    with pytest.raises(CapacityError):
        oracle_min_path(WeightGrid(np.full((1001, 1000), 1e-7)), (0.5, 0.5))


def test_oracle_below_monotone_engine_paths():
    rng = np.random.default_rng(3)
    sch = build_schedule(SUPER, 4)
    dims = [c + 1 for c in sch.corner(4)]
    for _ in range(20):
        g = random_grid(rng, dims)
        path = extract_path(admissible_chain(g, sch, SUPER), sch)
        if all(s == 1 for s in path.signs) and path.end == tuple(d - 1 for d in dims):
            assert oracle_min_path(g, SUPER)[0] <= path_weight(g, path, SUPER)
        # a path to a corner of a sub-box is monotone there
        sub = WeightGrid(g.values[: path.end[0] + 1, : path.end[1] + 1])
        if all(s == 1 for s in path.signs):
            assert oracle_min_path(sub, SUPER)[0] <= path_weight(g, path, SUPER) + 1e-15


def test_sharpness_weights_golden():
    p = HolderParams((0.4, 0.35))
    got = [oracle_min_path(gap_length_grid(p, n), p)[0] for n in (4, 8, 16, 32, 64)]
    golden = [3.3757405945226746, 4.062089964925651, 4.722896689153458,
              5.373802322006072, 6.0218172606542995]
    assert got == pytest.approx(golden, rel=1e-12)
    assert all(b > a for a, b in zip(got, got[1:]))


# -- CSV ----------------------------------------------------------------------

def test_grid_csv_round_trip():
    g = random_grid(np.random.default_rng(1), (3, 4, 2))
    text = csv_text(*grid_csv_rows(g))
    assert text.startswith("i1,i2,i3,value\n")
    back = read_grid_csv(text)
    assert np.array_equal(back.values, g.values)


@pytest.mark.parametrize("text", [
    "",
    "a,b,value\n0,0,1\n",
    "i1,i2,value\n0,0,0.1\n0,0,0.2\n",
    "i1,i2,value\n0,0,0.1\n1,1,0.2\n",
    "i1,value\n0,x\n",
])
def test_grid_csv_rejects(text):
    with pytest.raises(DomainError):
        read_grid_csv(text)
