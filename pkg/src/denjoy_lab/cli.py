"""``denjoy-lab <command> --config <path> [--out <dir>] [--seed <int>]``.

Exit codes: 0 success, 2 bad input or precondition (including the regime
rule), 3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path
from typing import List, Tuple

import numpy as np

from .circle import Cantor, Gap, HolderParams, Regime, make_word
from .config import COMMANDS, RunConfig, parse_config
from .denjoy import DenjoySystem, condition_F_sweep, holder_estimate, total_gap_sum
from .distortion import NOT_APPLICABLE, distortion_check, hyperbolic_fixed_point, make_context
from .errors import ConfigError, DenjoyLabError, InternalError
from .metrics import (equivariance_defect, homomorphism_check, rotation_number,
                      wandering_check)
from .paths import (WeightGrid, admissible_chain, build_schedule, extract_path,
                    gap_length_grid, oracle_min_path, path_weight, read_grid_csv,
                    terminal_run, theoretical_S)
from .reporting import atomic_write, gap_profile_svg, write_csv

Rows = List[Tuple[str, float, float]]  # quantity, value, error_budget
METRIC_HEADER = ["quantity", "value", "error_budget"]
HOMOMORPHISM_PAIRS = 5


def build_system(cfg: RunConfig) -> DenjoySystem:
    if not cfg.rhos:
        raise ConfigError("missing required key 'rhos' for this command")
    return DenjoySystem(cfg.taus, cfg.rhos, cfg.base_point, cfg.window)


def construct_rows(system: DenjoySystem, cfg: RunConfig) -> Rows:
    F_max, _, _, F_bound = condition_F_sweep(system.params, cfg.f_radius)
    return [
        ("circumference", system.circumference, system.tail_bound),
        ("partial_gap_sum", system.partial_sum, 0.0),
        ("tail_bound", system.tail_bound, 0.0),
        ("realized_gaps", system.gap_count, 0.0),
        ("condition_F_max", F_max, 0.0),
        ("condition_F_bound", F_bound, 0.0),
    ]


def _random_points(system: DenjoySystem, rng, n: int):
    pts = []
    W = system.window
    for j in range(n):
        if j % 2:
            pts.append(Cantor(float(rng.random())))
        else:
            idx = tuple(int(v) for v in rng.integers(-W, W + 1, size=system.d))
            pts.append(Gap(idx, float(rng.random())))
    return pts


def verify_rows(system: DenjoySystem, cfg: RunConfig) -> Rows:
    rng = np.random.default_rng([cfg.seed, 1])
    F_max, _, _, F_bound = condition_F_sweep(system.params, cfg.f_radius)
    rows: Rows = [("condition_F_ok", float(F_max <= F_bound), 0.0)]
    half = total_gap_sum(system.params, system.window // 2)
    rows.append(("tail_bound_decreasing", float(system.tail_bound < half.tail_bound), 0.0))
    mismatches, dt = 0, 0.0
    for pt in _random_points(system, rng, cfg.samples):
        for j in range(1, system.d + 1):
            for k in range(j + 1, system.d + 1):
                a = system.apply_generator(system.apply_generator(pt, j), k)
                b = system.apply_generator(system.apply_generator(pt, k), j)
                if isinstance(a, Gap):
                    mismatches += a.index != b.index
                    dt = max(dt, abs(a.t - b.t))
                else:
                    dt = max(dt, min(abs(a.base - b.base), 1 - abs(a.base - b.base)))
    rows.append(("commutation_index_mismatches", mismatches, 0.0))
    rows.append(("commutation_max_dt", dt, 1e-12))
    wander = wandering_check(system)
    rows.append(("wandering_symbolic_ok", float(wander.symbolic_ok), 0.0))
    rows.append(("wandering_max_overlap", wander.numeric_max_overlap, 1e-12))
    for k in range(1, system.d + 1):
        for sign in (1, -1):
            h = holder_estimate(system, k, system.params.tau(k), cfg.holder_samples,
                                sign=sign, seed=cfg.seed)
            rows.append((f"holder_f{k}{'' if sign > 0 else '_inv'}", h, 0.0))
    return rows


def rotnum_rows(system: DenjoySystem, cfg: RunConfig) -> Rows:
    n = cfg.iterations
    allowance = 10.0 * system.tail_bound
    rows: Rows = []
    for k in range(1, system.d + 1):
        est = rotation_number(lambda y, k=k: system.lift(y, k), n, 0.0,
                              system.circumference, allowance)
        rows.append((f"rho_{k}", est.value, est.error_budget))
        rows.append((f"rho_{k}_abs_error", abs(est.value - system.rhos[k - 1]), est.error_budget))
    rng = np.random.default_rng([cfg.seed, 2])

    def word():
        length = int(rng.integers(1, 4))
        return make_word((int(rng.integers(1, system.d + 1)), int(rng.choice([-1, 1])))
                         for _ in range(length))

    pairs = [(word(), word()) for _ in range(HOMOMORPHISM_PAIRS)]
    rows.append(("homomorphism_defect", homomorphism_check(system, pairs, n), 2.0 / n + allowance))
    ys = rng.random(cfg.samples) * system.circumference
    defect = max(equivariance_defect(system, ys, k) for k in range(1, system.d + 1))
    rows.append(("equivariance_defect", defect, 1e-9))
    rows.append(("wandering_max_overlap", wandering_check(system).numeric_max_overlap, 1e-12))
    return rows


def _engine_grid(cfg: RunConfig, dims) -> WeightGrid:
    if cfg.grid:
        return read_grid_csv(Path(cfg.grid).read_text(encoding="utf-8"))
    rng = np.random.default_rng([cfg.seed, 3])
    return WeightGrid(rng.lognormal(0.0, 1.5, size=dims)).normalized(0.999)


def path_rows(cfg: RunConfig) -> Rows:
    params = HolderParams(cfg.taus)
    if params.regime is Regime.SUBCRITICAL:
        rows: Rows = []
        prev = -math.inf
        growing = True
        for n in (4, 8, 16, 32, 64):
            w, _ = oracle_min_path(gap_length_grid(params, n), params)
            growing &= w > prev
            prev = w
            rows.append((f"min_path_weight_n{n}", w, 0.0))
        rows.append(("min_path_weight_increasing", float(growing), 0.0))
        return rows
    schedule = build_schedule(params, cfg.M0, cfg.A_base, cfg.growth_base)
    grid = _engine_grid(cfg, [c + 1 for c in schedule.corner(cfg.M0)])
    chain = admissible_chain(grid, schedule, params)
    path = extract_path(chain, schedule)
    bound = theoretical_S(params, schedule)
    s = schedule.s(schedule.M0)
    need = int(schedule.x[s - 1, schedule.M0] - schedule.x[s - 1, schedule.M0 - 1])
    return [
        ("M0", schedule.M0, 0.0),
        ("path_length", len(path), 0.0),
        ("path_weight", path_weight(grid, path, params), 0.0),
        ("S_stagewise", bound.stagewise, 0.0),
        ("S_envelope", bound.envelope, 0.0),
        ("C_prime", bound.C_prime, 0.0),
        ("terminal_run", terminal_run(path), 0.0),
        ("terminal_run_required", need, 0.0),
        ("min_admissible_proportion", min(chain.proportions), 0.0),
    ]


def distortion_report(system: DenjoySystem, cfg: RunConfig):
    params = system.params
    n = min(cfg.distortion_n, system.window)
    _, path = oracle_min_path(gap_length_grid(params, n), params)
    C_values = [holder_estimate(system, k, params.tau(k), cfg.holder_samples, sign=sign,
                                seed=cfg.seed)
                for k in range(1, system.d + 1) for sign in (1, -1)]
    ctx = make_context(system, path.word(), (0.0, system.gap_length((0,) * system.d)),
                       C_values, params)
    return ctx, distortion_check(system, ctx)


def _plot(system: DenjoySystem) -> str:
    ys = np.linspace(0.0, system.circumference, 801)[:-1]
    prof = system.log_derivative(ys, 1)
    return gap_profile_svg(system.circumference, system.realized_gaps(), ys, prof,
                           title=f"realized gaps and log f1' (circumference {system.circumference:.6f})")


def run(command: str, cfg: RunConfig) -> None:
    out = Path(cfg.out)
    if command == "construct":
        system = build_system(cfg)
        write_csv(out / "report.csv", METRIC_HEADER, construct_rows(system, cfg))
        atomic_write(out / "plot.svg", _plot(system))
    elif command == "verify":
        system = build_system(cfg)
        write_csv(out / "report.csv", METRIC_HEADER, verify_rows(system, cfg))
    elif command == "path-search":
        write_csv(out / "report.csv", METRIC_HEADER, path_rows(cfg))
    elif command == "distortion":
        _, rep = distortion_report(build_system(cfg), cfg)
        write_csv(out / "report.csv", *rep.csv_rows())
    elif command == "rotnum":
        write_csv(out / "report.csv", METRIC_HEADER, rotnum_rows(build_system(cfg), cfg))
    elif command == "report":
        system = build_system(cfg)
        rows = []
        for section, part in (("construct", construct_rows(system, cfg)),
                              ("verify", verify_rows(system, cfg)),
                              ("path-search", path_rows(cfg)),
                              ("rotnum", rotnum_rows(system, cfg))):
            rows += [(section, *r) for r in part]
        ctx, rep = distortion_report(system, cfg)
        for r in rep.per_stage:
            rows.append(("distortion", f"stage_{r.stage}_ratio", r.ratio, r.bound))
        rows.append(("distortion", "ratio_bound_ok", float(rep.ratio_bound_ok), 0.0))
        rows.append(("distortion", "flanks_ok", float(rep.flanks_ok), 0.0))
        fp = hyperbolic_fixed_point(system, ctx)
        rows.append(("distortion", "fixed_point_found", float(fp is not NOT_APPLICABLE), 0.0))
        write_csv(out / "report.csv", ["section"] + METRIC_HEADER, rows)
        atomic_write(out / "plot.svg", _plot(system))
    else:
        raise ValueError(f"unknown command {command!r}")


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="denjoy-lab", description="Commuting Denjoy systems, lattice-path selection and distortion checks.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True)
    ap.add_argument("--out", default=None)
    ap.add_argument("--seed", type=int, default=None)
    args = ap.parse_args(argv)
    try:
        text = Path(args.config).read_text(encoding="utf-8")
        cfg = parse_config(text).with_overrides(command=args.command, out=args.out, seed=args.seed)
        run(args.command, cfg)
    except InternalError as exc:
        print(f"denjoy-lab: internal error: {exc}", file=sys.stderr)
        return 3
    except (DenjoyLabError, ValueError, OSError) as exc:
        print(f"denjoy-lab: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
