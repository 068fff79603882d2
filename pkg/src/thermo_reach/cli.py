"""Command-line front end: ``thermo-reach <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import traceback
from concurrent.futures import ProcessPoolExecutor
from importlib import resources
from typing import List, Optional, Sequence

import numpy as np

from . import catalysis as cat
from .channels import SwapStep, apply_series, as_series, jc_trajectory
from .core import EPS_CAT, DimensionError, GibbsContext, InvalidLevelError, beta_order, population, slopes
from .export import barycentric_csv, curve_csv, dumps, rows_to_csv
from .lp import SolverFailure
from .majorization import curve
from .monotones import nonequilibrium_free_energy
from .polytope import EmptySliceError
from .reach import (
    METHODS,
    PreconditionError,
    ReachableSet,
    default_lmax_cap,
    eto_extremal_hull,
    eto_extremal_prune,
    lmax_bound,
    reachable_set,
    sample_instance,
    to_extremal_points,
)
from .selfcheck import run_checks

THREADS_ENV = "THERMO_REACH_THREADS"
FIXTURES = ("qutrit_213", "qutrit_123", "qutrit_swap_demo", "catalyst_ground_min")

NUMERICAL_ERRORS = (
    SolverFailure,
    EmptySliceError,
    PreconditionError,
    cat.NotReachableError,
    cat.TrajectoryInvariantError,
    FloatingPointError,
)


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# configuration


def load_fixture(name: str) -> dict:
    if name not in FIXTURES:
        raise UsageError(f"unknown fixture {name!r}; choose from {', '.join(FIXTURES)}")
    text = resources.files("thermo_reach").joinpath("fixtures", f"{name}.json").read_text()
    return json.loads(text)


def _floats(text: str) -> List[float]:
    try:
        return [float(x) for x in text.replace(" ", "").split(",") if x]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def parse_series(text: str) -> tuple:
    """``"1-2,2-3:0.5"`` -> swap steps; ``:lam`` marks a partial swap."""
    steps = []
    for tok in filter(None, text.replace(" ", "").split(",")):
        pair, _, lam = tok.partition(":")
        try:
            j, k = (int(v) for v in pair.split("-"))
            steps.append(SwapStep(j, k, float(lam) if lam else 1.0))
        except ValueError as exc:
            raise UsageError(f"bad swap step {tok!r}: {exc}") from exc
    return tuple(steps)


def resolve_config(args) -> dict:
    """Merge fixture, config file and flags; later sources win."""
    cfg: dict = {}
    if args.fixture:
        cfg.update(load_fixture(args.fixture))
    if args.config:
        try:
            with open(args.config) as fh:
                cfg.update(json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
    if args.energies is not None:
        cfg["beta_energies"] = args.energies
    if args.state is not None:
        cfg["probs"] = args.state
    return cfg


def context_and_state(cfg: dict, need_state: bool = True):
    if "beta_energies" not in cfg:
        raise UsageError("no energies given (use --energies, --config or --fixture)")
    try:
        ctx = GibbsContext.from_energies(cfg["beta_energies"])
        p = population(cfg["probs"]) if "probs" in cfg else None
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if need_state and p is None:
        raise UsageError("no state given (use --state, --config or --fixture)")
    if p is not None and len(p) != ctx.dim:
        raise UsageError(f"state has {len(p)} entries but there are {ctx.dim} levels")
    return ctx, p


def worker_count(args) -> int:
    if args.threads is not None:
        n = args.threads
    elif os.environ.get(THREADS_ENV):
        try:
            n = int(os.environ[THREADS_ENV])
        except ValueError as exc:
            raise UsageError(f"{THREADS_ENV} must be an integer") from exc
    else:
        n = os.cpu_count() or 1
    if n < 1:
        raise UsageError("thread count must be positive")
    return n


def parallel_map(fn, items: Sequence, workers: int) -> list:
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))


def emit(text: str, path: Optional[str]):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------------------
# subcommands


def cmd_curve(args, cfg):
    ctx, p = context_and_state(cfg)
    emit(curve_csv(curve(p, ctx)), args.out)


def cmd_order(args, cfg):
    ctx, p = context_and_state(cfg)
    emit(dumps({"order": list(beta_order(p, ctx)), "slopes": slopes(p, ctx)}), args.out)


def _reach_payload(rs: ReachableSet, p, ctx) -> dict:
    return {"context": ctx.to_json(), "initial": p, "reachable": rs.to_json()}


def cmd_reach(args, cfg):
    ctx, p = context_and_state(cfg)
    if args.method == "eto-prune":
        rs = eto_extremal_prune(p, ctx, args.lmax_cap, post_filter=args.post_filter)
    else:
        rs = reachable_set(p, ctx, args.method, args.lmax_cap)
    if args.json_out:
        emit(dumps(_reach_payload(rs, p, ctx)), args.json_out)
    if args.csv and ctx.dim == 3:
        emit(barycentric_csv(rs.points, args.method), args.out)
    elif not args.json_out or args.out:
        emit(dumps(_reach_payload(rs, p, ctx)), args.out)


def _bounds_instance(job):
    d, seed, index, method, cap = job
    p, ctx = sample_instance(np.random.default_rng([seed, d, index]), d)
    if method == "eto-hull":
        rs = eto_extremal_hull(p, ctx, cap)
    else:
        rs = eto_extremal_prune(p, ctx, cap, post_filter=True)
    longest = max((len(s) for s in rs.series), default=0)
    return longest, len(rs.vertices), rs.exhausted


def cmd_bounds(args, cfg):
    rows = []
    workers = worker_count(args)
    for d in args.d:
        if d < 3:
            raise UsageError("bounds needs d >= 3")
        row = [d, math.factorial(d), lmax_bound(d)]
        if args.samples > 0:
            method = args.method or ("eto-hull" if d <= 4 else "eto-prune")
            cap = args.lmax_cap or default_lmax_cap(d)
            jobs = [(d, args.seed, i, method, cap) for i in range(args.samples)]
            res = parallel_map(_bounds_instance, jobs, workers)
            row += [
                max(r[0] for r in res),
                float(np.mean([r[1] for r in res])),
                sum(1 for r in res if not r[2]),
            ]
        else:
            row += ["", "", ""]
        rows.append(row)
    header = ["d", "factorial_bound", "lmax_bound", "lmax_observed", "vertices_mean", "capped_runs"]
    emit(rows_to_csv(header, rows), args.out)


def _catalyst(args, cfg) -> cat.CatalystSpec:
    c1 = args.c1 if args.c1 is not None else cfg.get("c1")
    if c1 is None:
        raise UsageError("no catalyst given (use --c1 or a config with c1)")
    try:
        return cat.CatalystSpec(float(c1))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _slice_job(job):
    p, energies, c1, directions = job
    ctx = GibbsContext.from_energies(energies)
    return cat.ceto_slice(p, cat.CatalystSpec(c1), ctx, post_filter=False, directions=directions)


def _transition(args, cfg, ctx, p):
    c = _catalyst(args, cfg)
    target = args.target if args.target is not None else cfg.get("target")
    if target is None:
        raise UsageError("no target given (use --target or a config with target)")
    q = np.asarray(target, dtype=float)
    if len(q) != ctx.dim:
        raise UsageError("target dimension does not match the system")
    if args.snap:
        region = cat.ceto_slice(p, c, ctx)
        q = cat.snap_to_vertex(q, region, args.snap)
    else:
        q = population(q)
    cands = None
    if args.candidates:
        try:
            with open(args.candidates) as fh:
                cands = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read candidates {args.candidates}: {exc}") from exc
    elif not args.all_vertices:
        cands = cfg.get("candidates")
    if cands is not None:
        try:
            cands = [as_series(s) for s in cands]
        except (TypeError, ValueError, KeyError) as exc:
            raise UsageError(f"bad candidate series: {exc}") from exc
    return cat.decompose_transition(p, q, c, ctx, candidates=cands)


def cmd_catalysis(args, cfg):
    ctx, p = context_and_state(cfg)
    if ctx.dim != 3 and args.action in ("sweep", "optimal-c1"):
        raise UsageError(f"catalysis {args.action} is implemented for qutrits")
    if args.action == "slice":
        c = _catalyst(args, cfg)
        rs = cat.ceto_slice(p, c, ctx, directions=args.directions)
        if args.csv:
            emit(barycentric_csv(rs.points, f"{c.c1:.6g}"), args.out)
        else:
            emit(dumps({"c1": c.c1, "slice": rs.to_json()}), args.out)
    elif args.action == "sweep":
        grid = cat.default_grid(args.grid_n)
        jobs = [(p, list(ctx.energies), c1, args.directions) for c1 in grid]
        slices = parallel_map(_slice_job, jobs, worker_count(args))
        res = cat.assemble_sweep(grid, slices)
        if args.csv:
            to_set = to_extremal_points(p, ctx)
            out = [barycentric_csv(to_set.points, "to")]
            out += [barycentric_csv(s.points, f"{c1:.6g}").split("\n", 1)[1] for c1, s in zip(grid, slices)]
            emit("".join(out), args.out)
        else:
            emit(dumps(res.to_json()), args.out)
    elif args.action == "optimal-c1":
        c = cat.optimal_catalyst_ground_min(p, ctx)
        payload = {"c1": c.c1, "method": "closed-form"}
        if args.refine:
            c1, val = cat.refine_catalyst(p, ctx, grid_n=args.grid_n)
            payload.update({"c1_numeric": c1, "ground_min": val})
        emit(dumps(payload), args.out)
    elif args.action == "transition":
        emit(dumps(_transition(args, cfg, ctx, p).to_json()), args.out)
    elif args.action == "track":
        t = _transition(args, cfg, ctx, p)
        if not t.recombined:
            raise cat.NotReachableError("transition could not be merged into a single executable series")
        traj = cat.track(t, ctx, args.tol)
        emit(traj.to_csv() if args.csv else dumps(traj.to_json()), args.out)


def cmd_trajectory(args, cfg):
    ctx, p = context_and_state(cfg)
    rows = []
    if args.jc:
        j, k = args.jc
        for time, q in jc_trajectory(p, j, k, ctx, samples=args.samples):
            rows.append([time, *map(float, q), nonequilibrium_free_energy(q, ctx)])
        header = ["t", *[f"p_{i + 1}" for i in range(ctx.dim)], "F"]
    else:
        text = args.series if args.series is not None else cfg.get("series")
        if text is None:
            raise UsageError("give --series or --jc J K")
        series = parse_series(text) if isinstance(text, str) else as_series(text)
        q = p
        rows.append([0, *map(float, q), nonequilibrium_free_energy(q, ctx)])
        for i, step in enumerate(series, 1):
            q = apply_series((step,), q, ctx)
            rows.append([i, *map(float, q), nonequilibrium_free_energy(q, ctx)])
        header = ["t", *[f"p_{i + 1}" for i in range(ctx.dim)], "F"]
    emit(rows_to_csv(header, rows), args.out)


def cmd_verify(args, cfg):
    results = run_checks(args.samples, args.seed)
    lines = [f"{r.name}: {r.passed} passed, {r.failed} failed" for r in results]
    emit("\n".join(lines) + "\n", args.out)
    return 0 if all(r.ok for r in results) else 1


def cmd_sample(args, cfg):
    rng = np.random.default_rng(args.seed)
    items = []
    for _ in range(args.count):
        p, ctx = sample_instance(rng, args.d)
        items.append({"beta_energies": ctx.energies, "probs": p})
    emit(dumps(items[0] if args.count == 1 else items), args.out)


# --------------------------------------------------------------------------
# parser


def _pair(text: str):
    vals = text.split("-")
    if len(vals) != 2:
        raise argparse.ArgumentTypeError("expected J-K")
    return int(vals[0]), int(vals[1])


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--energies", type=_floats, help="beta*E_i, comma separated")
    common.add_argument("--state", type=_floats, help="populations p_i, comma separated")
    common.add_argument("--config", help="JSON file with the same keys as the flags")
    common.add_argument("--fixture", help=f"named instance: {', '.join(FIXTURES)}")
    common.add_argument("--threads", type=int, help=f"worker processes (env {THREADS_ENV}, default: all cores)")
    common.add_argument("--out", help="output path (default: stdout)")

    ap = argparse.ArgumentParser(prog="thermo-reach", description="Reachable states under thermal operations.")
    sub = ap.add_subparsers(dest="command", required=True)

    sub.add_parser("curve", parents=[common], help="thermo-majorization curve as CSV x,y")
    sub.add_parser("order", parents=[common], help="beta-order and slopes")

    r = sub.add_parser("reach", parents=[common], help="reachable-state vertices")
    r.add_argument("--method", choices=METHODS, default="eto-hull")
    r.add_argument("--lmax-cap", type=int)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--json-out")
    r.add_argument("--post-filter", action="store_true", help="reduce eto-prune output to extremal points")
    r.add_argument("--csv", action="store_true", help="barycentric CSV (qutrits)")

    b = sub.add_parser("bounds", parents=[common], help="series-length bounds versus sampled maxima")
    b.add_argument("--d", type=int, nargs="+", default=[4, 5, 6, 7])
    b.add_argument("--samples", type=int, default=0)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--method", choices=("eto-hull", "eto-prune"))
    b.add_argument("--lmax-cap", type=int)

    c = sub.add_parser("catalysis", parents=[common], help="catalytic slices and transitions")
    c.add_argument("action", choices=("slice", "sweep", "optimal-c1", "transition", "track"))
    c.add_argument("--c1", type=float)
    c.add_argument("--grid-n", type=int, default=200)
    c.add_argument("--directions", type=int, default=720)
    c.add_argument("--target", type=_floats)
    c.add_argument("--snap", type=float, nargs="?", const=1e-3, help="snap target to a slice vertex within this tolerance")
    c.add_argument("--candidates", help="JSON list of swap series to decompose over")
    c.add_argument("--all-vertices", action="store_true", help="ignore candidate series from the config")
    c.add_argument("--refine", action="store_true", help="also minimise the ground population numerically")
    c.add_argument("--tol", type=float, default=EPS_CAT)
    c.add_argument("--csv", action="store_true")

    t = sub.add_parser("trajectory", parents=[common], help="state and free energy along a swap series")
    t.add_argument("--series", help='e.g. "1-2,2-3:0.5"')
    t.add_argument("--jc", type=_pair, metavar="J-K", help="continuous two-level thermalization")
    t.add_argument("--samples", type=int, default=101)

    v = sub.add_parser("verify", parents=[common], help="run the built-in property checks")
    v.add_argument("--samples", type=int, default=200)
    v.add_argument("--seed", type=int, default=0)

    s = sub.add_parser("sample", parents=[common], help="draw random instances")
    s.add_argument("--d", type=int, default=3)
    s.add_argument("--count", type=int, default=1)
    s.add_argument("--seed", type=int, default=0)
    return ap


COMMANDS = {
    "curve": cmd_curve,
    "order": cmd_order,
    "reach": cmd_reach,
    "bounds": cmd_bounds,
    "catalysis": cmd_catalysis,
    "trajectory": cmd_trajectory,
    "verify": cmd_verify,
    "sample": cmd_sample,
}


def _failing_operation(exc: BaseException) -> str:
    """Innermost package frame of the traceback as ``module.function``."""
    where = "thermo_reach"
    for frame, _ in traceback.walk_tb(exc.__traceback__):
        mod = frame.f_globals.get("__name__", "")
        if mod.startswith("thermo_reach.") and mod != __name__:
            where = f"{mod.split('.', 1)[1]}.{frame.f_code.co_name}"
    return where


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = resolve_config(args)
        code = COMMANDS[args.command](args, cfg)
        return int(code or 0)
    except (UsageError, DimensionError, InvalidLevelError) as exc:
        print(f"thermo-reach {args.command}: {exc}", file=sys.stderr)
        return 2
    except NUMERICAL_ERRORS as exc:
        print(f"thermo-reach {args.command}: {_failing_operation(exc)} failed: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())
