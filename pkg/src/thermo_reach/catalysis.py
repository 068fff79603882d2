"""
Catalytic ETO with an exactly returned, degenerate qubit catalyst.

Joint states use the flat index ``2 * (a - 1) + b`` for system level ``a``
(1..d) and catalyst level ``b`` (1..2); the catalyst carries no energy, so
the joint energies are the system energies repeated twice.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import least_squares

from .channels import (
    SwapSeries,
    SwapStep,
    apply_series,
    apply_step,
    as_series,
    _key,
    canonical_ordering,
    series_to_json,
    trace_equivalent,
)
from .core import EPS_CAT, EPS_HULL, DegeneracyWarning, GibbsContext, _check_dim, beta_order
from .lp import StandardFormLP
from .monotones import marginals, mutual_information, nonequilibrium_free_energy
from .polytope import PointSet, hull_membership, slice_vertices
from .reach import ReachableSet, eto_extremal_hull, eto_extremal_prune

CATALYST_CTX = GibbsContext.from_energies([0.0, 0.0])
MAX_RECOMBINE_SUPPORT = 4


class NotReachableError(ValueError):
    pass


class TrajectoryInvariantError(RuntimeError):
    def __init__(self, step: int, message: str):
        super().__init__(f"step {step}: {message}")
        self.step = step


@dataclass(frozen=True)
class CatalystSpec:
    """Qubit catalyst ``(c1, 1 - c1)`` on a degenerate two-level Hamiltonian."""

    c1: float

    def __post_init__(self):
        c1 = float(self.c1)
        if not 0.0 <= c1 <= 1.0:
            raise ValueError(f"c1={c1} outside [0, 1]")
        object.__setattr__(self, "c1", c1)

    @property
    def probs(self) -> np.ndarray:
        return np.array([self.c1, 1.0 - self.c1])

    def to_json(self) -> dict:
        return {"c1": self.c1}


def joint_context(ctx: GibbsContext) -> GibbsContext:
    return GibbsContext.from_energies(np.repeat(ctx.energies, 2))


def tensor(p, c: CatalystSpec, ctx: GibbsContext) -> Tuple[np.ndarray, GibbsContext]:
    _check_dim(p, ctx)
    return np.kron(np.asarray(p, dtype=float), c.probs), joint_context(ctx)


def flat_index(a: int, b: int) -> int:
    """Joint label of system level ``a`` and catalyst level ``b`` (all 1-indexed)."""
    return 2 * (a - 1) + b


def split_index(i: int) -> Tuple[int, int]:
    return (i - 1) // 2 + 1, (i - 1) % 2 + 1


def catalyst_embedding(c: CatalystSpec, d: int) -> np.ndarray:
    """Linear map ``q -> q (x) c`` as a (2d x d) matrix."""
    return np.kron(np.eye(d), c.probs[:, None])


def product_reachable(
    p, c: CatalystSpec, ctx: GibbsContext, method: str = "eto-prune", post_filter: bool = True,
    lmax_cap: Optional[int] = None,
) -> ReachableSet:
    """Reachable set of the joint state ``p (x) c``."""
    joint, jctx = tensor(p, c, ctx)
    if method == "eto-hull":
        return eto_extremal_hull(joint, jctx, lmax_cap)
    if method == "eto-prune":
        return eto_extremal_prune(joint, jctx, lmax_cap, post_filter=post_filter)
    raise ValueError(f"unsupported joint method {method!r}")


def ceto_slice(
    p,
    c: CatalystSpec,
    ctx: GibbsContext,
    joint_set: Optional[ReachableSet] = None,
    post_filter: bool = True,
    directions: int = 720,
) -> ReachableSet:
    """
    Vertices of the system states ``q`` with ``q (x) c`` reachable from
    ``p (x) c``.  ``joint_set`` may be passed to reuse a computed joint
    reachable set.
    """
    if joint_set is None:
        joint_set = product_reachable(p, c, ctx, post_filter=post_filter)
    emb = catalyst_embedding(c, ctx.dim)
    verts = slice_vertices(joint_set.points, emb, dims=ctx.dim - 1, directions=directions)
    return ReachableSet(verts, "ceto-slice", joint_set.lmax_used, joint_set.exhausted, False, joint_set.levels)


@dataclass(frozen=True)
class SweepResult:
    """
    Per-catalyst slices and the region they cover.

    The catalytic reachable set is the plain union of the slices;
    ``hull`` is the convex hull of that union, kept for display only.
    """

    grid: Tuple[float, ...]
    slices: Tuple[ReachableSet, ...]
    hull: PointSet

    def union_contains(self, x, eps: float = EPS_HULL) -> bool:
        return any(hull_membership(x, s.vertices, eps)[0] for s in self.slices)

    def slice_containing(self, x, eps: float = EPS_HULL) -> Optional[float]:
        for c1, s in zip(self.grid, self.slices):
            if hull_membership(x, s.vertices, eps)[0]:
                return c1
        return None

    @property
    def all_vertices(self) -> np.ndarray:
        return np.vstack([s.points for s in self.slices])

    def to_json(self) -> dict:
        return {
            "grid": list(self.grid),
            "slices": [s.vertices.points.tolist() for s in self.slices],
            "union_hull": self.hull.points.tolist(),
        }


def default_grid(n: int = 200) -> List[float]:
    """``n`` uniform catalyst populations strictly inside (0, 1)."""
    return [(i + 0.5) / n for i in range(n)]


def assemble_sweep(grid: Sequence[float], slices: Sequence[ReachableSet]) -> SweepResult:
    """Bundle precomputed slices (e.g. from a worker pool) into a sweep."""
    from .polytope import extremal_filter

    pts = np.vstack([s.points for s in slices])
    hull = extremal_filter(PointSet.build(pts))
    return SweepResult(tuple(float(g) for g in grid), tuple(slices), hull)


def ceto_sweep(
    p, ctx: GibbsContext, grid: Optional[Sequence[float]] = None, post_filter: bool = False, directions: int = 720
) -> SweepResult:
    grid = default_grid() if grid is None else list(grid)
    slices = [ceto_slice(p, CatalystSpec(c1), ctx, post_filter=post_filter, directions=directions) for c1 in grid]
    return assemble_sweep(grid, slices)


def optimal_catalyst_ground_min(p, ctx: GibbsContext) -> CatalystSpec:
    """
    Catalyst population that minimises the reachable ground population of a
    qutrit whose beta-order is ``(2, 1, 3)``.  For other orders the value is
    still returned, with a warning.
    """
    if ctx.dim != 3:
        raise ValueError("the closed-form catalyst is defined for qutrits")
    _check_dim(p, ctx)
    p1, p3 = float(p[0]), float(p[2])
    if p1 <= 0:
        raise ValueError("ground population must be positive")
    if beta_order(p, ctx) != (2, 1, 3):
        warnings.warn(
            f"closed-form catalyst evaluated outside its (2, 1, 3) family "
            f"(order {beta_order(p, ctx)})",
            DegeneracyWarning,
            stacklevel=2,
        )
    d13 = ctx.delta[0, 2]
    c1 = (-p3 + math.sqrt(p3 * p3 + 8 * d13 * p1 * p3)) / (4 * d13 * p1)
    return CatalystSpec(min(max(c1, 0.0), 1.0))


def snap_to_vertex(q, region: ReachableSet, tol: float = 1e-3) -> np.ndarray:
    """Nearest vertex of ``region`` to ``q`` in the max norm, if within ``tol``."""
    gaps = np.max(np.abs(region.points - np.asarray(q, dtype=float)), axis=1)
    i = int(np.argmin(gaps))
    if gaps[i] > tol:
        raise NotReachableError(f"no vertex within {tol} of the target (closest {gaps[i]:.3e})")
    return region.points[i].copy()


def ground_population_min(p, ctx: GibbsContext, c1: float, directions: int = 720) -> float:
    """Smallest ground-level population reachable with catalyst ``c1``."""
    sl = ceto_slice(p, CatalystSpec(c1), ctx, post_filter=False, directions=directions)
    return float(sl.points[:, 0].min())


def refine_catalyst(p, ctx: GibbsContext, objective=ground_population_min, grid_n: int = 20, xatol: float = 1e-4):
    """
    Minimise ``objective(p, ctx, c1)`` over ``c1``: a uniform scan locates
    the best cell, then a bounded golden-section search refines inside the
    neighbouring cells.  Returns ``(c1, value)``.

    Relabelling the two degenerate catalyst levels maps ``c1`` to
    ``1 - c1`` without changing any reachable system state, so only
    ``c1 <= 1/2`` is searched.
    """
    from scipy.optimize import minimize_scalar

    step = 0.5 / grid_n
    grid = [(i + 0.5) * step for i in range(grid_n)]
    vals = [objective(p, ctx, c) for c in grid]
    k = int(np.argmin(vals))
    lo = max(0.0, grid[k] - step)
    hi = min(0.5, grid[k] + step)
    res = minimize_scalar(lambda c: objective(p, ctx, c), bounds=(lo, hi), method="bounded",
                          options={"xatol": xatol})
    if res.fun <= vals[k]:
        return float(res.x), float(res.fun)
    return grid[k], float(vals[k])


# --------------------------------------------------------------------------
# decomposition into executable series


@dataclass(frozen=True)
class CatalyticTransition:
    """
    ``initial (x) c -> final (x) c`` realised either by a single series with
    partial swaps (``recombined``) or, failing that, by the weighted family
    of beta-swap series in ``family``.
    """

    initial: np.ndarray
    final: np.ndarray
    catalyst: CatalystSpec
    series: SwapSeries
    weights: Tuple[float, ...]
    family: Tuple[SwapSeries, ...]
    recombined: bool
    residual: float

    def to_json(self) -> dict:
        return {
            "initial": [float(x) for x in self.initial],
            "final": [float(x) for x in self.final],
            "catalyst": self.catalyst.to_json(),
            "series": series_to_json(self.series),
            "weights": list(self.weights),
            "family": [series_to_json(s) for s in self.family],
            "recombined": self.recombined,
            "residual": self.residual,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "CatalyticTransition":
        return cls(
            np.array(obj["initial"], dtype=float),
            np.array(obj["final"], dtype=float),
            CatalystSpec(obj["catalyst"]["c1"]),
            as_series(obj["series"]),
            tuple(obj["weights"]),
            tuple(as_series(s) for s in obj["family"]),
            bool(obj["recombined"]),
            float(obj["residual"]),
        )


def _without(series: Sequence[SwapStep], drop) -> Tuple[SwapStep, ...]:
    return tuple(s for i, s in enumerate(series) if i not in drop)


def recombine(family: Sequence[SwapSeries], weights, start, target, ctx: GibbsContext, tol: float = EPS_CAT):
    """
    Merge series that differ only by inserted swaps into one series where
    each inserted swap becomes a partial swap.

    Templates tried are the members themselves (longest first) and the
    shortest member with all members' insertions merged in.  Every member
    must equal the template with some inserted positions removed (up to
    reordering of commuting steps).  The partial-swap strengths are fitted so the
    merged series maps ``start`` to ``target``; ``None`` is returned when no
    fit reaches ``tol``.
    """
    shortest = min(family, key=len)
    for template in _templates(family, shortest):
        found = _fit_template(template, shortest, family, weights, start, target, ctx, tol)
        if found is not None:
            return found
    return None


def _insertions(member, shortest):
    """``(slot, step)`` pairs that turn ``shortest`` into ``member``, or None."""
    extra = len(member) - len(shortest)
    for drop in itertools.combinations(range(len(member)), extra):
        if _without(member, drop) == tuple(shortest):
            kept = 0
            out = []
            for i, st in enumerate(member):
                if i in drop:
                    out.append((kept, st))
                else:
                    kept += 1
            return out
    return None


def _templates(family, shortest):
    """Candidate merged series: the members themselves, longest first, then
    the shortest member with every member's insertions added."""
    yield from sorted(family, key=len, reverse=True)
    slots = {}
    for m in family:
        ins = _insertions(m, shortest)
        if ins is None:
            return
        for slot, st in ins:
            slots.setdefault(slot, [])
            if st not in slots[slot]:
                slots[slot].append(st)
    if sum(len(v) for v in slots.values()) > 6:
        return
    keys = sorted(slots)
    for k in keys:  # canonical order first: larger level pair leads
        slots[k].sort(key=_key, reverse=True)
    for combo in itertools.product(*(itertools.permutations(slots[k]) for k in keys)):
        out = []
        for i in range(len(shortest) + 1):
            if i in keys:
                out.extend(combo[keys.index(i)])
            if i < len(shortest):
                out.append(shortest[i])
        yield tuple(out)


def _fit_template(longest, shortest, family, weights, start, target, ctx, tol):
    extra = len(longest) - len(shortest)
    if extra == 0 or extra > 6:
        return None
    for drop in itertools.combinations(range(len(longest)), extra):
        if not trace_equivalent(_without(longest, drop), shortest):
            continue
        used = []
        for s in family:
            hit = None
            for r in range(extra + 1):
                for sub in itertools.combinations(drop, r):
                    if len(longest) - r == len(s) and trace_equivalent(_without(longest, sub), s):
                        hit = set(drop) - set(sub)
                        break
                if hit is not None:
                    break
            if hit is None:
                break
            used.append(hit)
        if len(used) != len(family):
            continue
        init = np.array([sum(w for w, u in zip(weights, used) if pos in u) for pos in drop])

        def build(lams):
            steps = list(longest)
            for pos, lam in zip(drop, lams):
                steps[pos] = SwapStep(longest[pos].j, longest[pos].k, float(np.clip(lam, 0, 1)))
            return tuple(steps)

        def resid(lams):
            return apply_series(build(lams), start, ctx) - target

        fit = least_squares(resid, np.clip(init, 0, 1), bounds=(0, 1), xtol=1e-15, ftol=1e-15, gtol=1e-15)
        series = build(fit.x)
        err = float(np.max(np.abs(apply_series(series, start, ctx) - target)))
        if err <= tol:
            return canonical_ordering(series), err
    return None


def decompose_transition(
    p,
    q,
    c: CatalystSpec,
    ctx: GibbsContext,
    joint_set: Optional[ReachableSet] = None,
    tol: float = EPS_CAT,
    candidates: Optional[Sequence[SwapSeries]] = None,
) -> CatalyticTransition:
    """
    Realise ``p (x) c -> q (x) c`` as an executable swap series.

    ``q (x) c`` is written as a convex combination of joint vertices by a
    linear program that minimises the weighted series length; the
    supporting series are then merged into one series with partial swaps
    when they differ only by inserted swaps.  Passing ``candidates``
    restricts the combination to the endpoints of those series.
    """
    start, jctx = tensor(p, c, ctx)
    target = np.kron(np.asarray(q, dtype=float), c.probs)
    if np.max(np.abs(start - target)) <= tol:
        return CatalyticTransition(start[::2] + start[1::2], np.asarray(q, float), c, (), (1.0,), ((),), True, 0.0)
    if candidates is not None:
        all_series = [as_series(s) for s in candidates]
        verts = np.array([apply_series(s, start, jctx) for s in all_series])
    else:
        if joint_set is None:
            joint_set = product_reachable(p, c, ctx)
        verts = joint_set.points
        all_series = list(joint_set.series)
    inside, _ = hull_membership(target, verts)
    if not inside:
        raise NotReachableError("q (x) c is not in the joint reachable set")
    lengths = np.array([len(s) for s in all_series], dtype=float)
    a = np.vstack([verts.T, np.ones(len(verts))])
    b = np.append(target, 1.0)
    lp = StandardFormLP(a, b, feas_tol=EPS_HULL)
    alpha, _ = lp.maximize(-lengths)
    support = [i for i in np.flatnonzero(alpha > 1e-12)]
    weights = alpha[support] / alpha[support].sum()
    family = tuple(all_series[i] for i in support)
    p_sys = np.asarray(p, dtype=float)
    q_sys = np.asarray(q, dtype=float)
    if len(support) == 1:
        series = family[0]
        err = float(np.max(np.abs(apply_series(series, start, jctx) - target)))
        return CatalyticTransition(p_sys, q_sys, c, canonical_ordering(series), (1.0,), family, err <= tol, err)
    if len(support) <= MAX_RECOMBINE_SUPPORT:
        merged = recombine(family, weights, start, target, jctx, tol)
        if merged is not None:
            series, err = merged
            return CatalyticTransition(p_sys, q_sys, c, series, tuple(weights), family, True, err)
    mix = sum(w * apply_series(s, start, jctx) for w, s in zip(weights, family))
    err = float(np.max(np.abs(mix - target)))
    return CatalyticTransition(p_sys, q_sys, c, (), tuple(weights), family, False, err)


# --------------------------------------------------------------------------
# step-resolved accounting


@dataclass(frozen=True)
class TrajectoryEntry:
    step: Optional[SwapStep]
    joint: np.ndarray
    f_system: float
    f_catalyst: float
    f_total: float
    mutual_info: float
    system_unchanged: bool = False

    def to_json(self) -> dict:
        return {
            "step": None if self.step is None else self.step.to_json(),
            "joint": [float(x) for x in self.joint],
            "f_system": self.f_system,
            "f_catalyst": self.f_catalyst,
            "f_total": self.f_total,
            "mutual_info": self.mutual_info,
            "system_unchanged": self.system_unchanged,
        }


@dataclass(frozen=True)
class Trajectory:
    """Free-energy bookkeeping after every step, starting with the initial state."""

    entries: Tuple[TrajectoryEntry, ...]
    d_sys: int

    def __len__(self) -> int:
        return len(self.entries)

    def system_marginal(self, i: int) -> np.ndarray:
        return marginals(self.entries[i].joint, self.d_sys, 2)[0]

    def catalyst_marginal(self, i: int) -> np.ndarray:
        return marginals(self.entries[i].joint, self.d_sys, 2)[1]

    def to_json(self) -> dict:
        return {"d_sys": self.d_sys, "entries": [e.to_json() for e in self.entries]}

    def to_csv(self) -> str:
        head = ["index", "j", "k", "lam"]
        head += [f"joint_{i + 1}" for i in range(2 * self.d_sys)]
        head += ["f_system", "f_catalyst", "f_total", "mutual_info", "system_unchanged"]
        rows = [",".join(head)]
        for n, e in enumerate(self.entries):
            st = ["", "", ""] if e.step is None else [str(e.step.j), str(e.step.k), f"{e.step.lam:.12g}"]
            vals = [str(n)] + st + [f"{x:.12g}" for x in e.joint]
            vals += [f"{x:.12g}" for x in (e.f_system, e.f_catalyst, e.f_total, e.mutual_info)]
            vals.append(str(int(e.system_unchanged)))
            rows.append(",".join(vals))
        return "\n".join(rows) + "\n"


def _entry(step, joint, d, ctx, jctx, prev_sys=None) -> TrajectoryEntry:
    ps, pc = marginals(joint, d, 2)
    unchanged = prev_sys is not None and bool(np.max(np.abs(ps - prev_sys)) <= 1e-12)
    return TrajectoryEntry(
        step,
        joint,
        nonequilibrium_free_energy(ps, ctx),
        nonequilibrium_free_energy(pc, CATALYST_CTX),
        nonequilibrium_free_energy(joint, jctx),
        mutual_information(joint, d, 2),
        unchanged,
    )


def track(t: CatalyticTransition, ctx: GibbsContext, tol: float = EPS_CAT) -> Trajectory:
    """
    Apply the transition's series step by step and record local and global
    free energies and the system-catalyst mutual information.

    Raises ``TrajectoryInvariantError`` if the total free energy rises, or if
    the final state is correlated or has a different catalyst marginal.
    """
    if not t.recombined:
        raise ValueError("only recombined transitions have a single series to track")
    d = ctx.dim
    joint, jctx = tensor(t.initial, t.catalyst, ctx)
    entries = [_entry(None, joint, d, ctx, jctx)]
    for n, step in enumerate(t.series, start=1):
        prev = marginals(joint, d, 2)[0]
        joint = apply_step(step, joint, jctx)
        e = _entry(step, joint, d, ctx, jctx, prev)
        if e.f_total > entries[-1].f_total + 1e-10:
            raise TrajectoryInvariantError(n, "total free energy increased")
        entries.append(e)
    last = entries[-1]
    if last.mutual_info > tol:
        raise TrajectoryInvariantError(len(entries) - 1, f"residual correlation {last.mutual_info:.3e}")
    pc = marginals(last.joint, d, 2)[1]
    if np.max(np.abs(pc - t.catalyst.probs)) > tol:
        raise TrajectoryInvariantError(len(entries) - 1, "catalyst not returned")
    return Trajectory(tuple(entries), d)
