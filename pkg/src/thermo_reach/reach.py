"""
Reachable-state polytopes under thermal operations and elementary thermal
operations (sequences and mixtures of two-level swaps).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .channels import SwapSeries, SwapStep, apply_series, standard_formation, swap_vector
from .core import (
    EPS_HULL,
    EPS_MAJ,
    EPS_SLOPE,
    DimensionError,
    GibbsContext,
    _check_dim,
    _tied,
    beta_order,
    is_valid_order,
    order_from_slopes,
    orders_from_slopes,
)
from .majorization import curve, evaluate
from .polytope import (
    Deduplicator,
    PointSet,
    VertexLabel,
    extremal_filter,
    extremal_mask,
    hull_membership,
)

METHODS = ("to", "eto-hull", "eto-prune", "eto-qutrit", "eto-mono")
MAX_TO_DIM = 8


class PreconditionError(ValueError):
    pass


@dataclass(frozen=True)
class ReachableSet:
    """
    Vertex list of a reachable-state polytope.

    ``exhausted`` is true when the search stopped because no new candidate
    vertex appeared, rather than because the length cap was reached.
    ``superset`` marks vertex lists that may contain non-extremal points.
    """

    vertices: PointSet
    method: str
    lmax_used: int = 0
    exhausted: bool = True
    superset: bool = False
    levels: int = 0

    def __len__(self) -> int:
        return len(self.vertices)

    @property
    def points(self) -> np.ndarray:
        return self.vertices.points

    @property
    def series(self) -> List[SwapSeries]:
        return [l.series if l is not None else () for l in self.vertices.labels]

    def to_json(self) -> dict:
        return {
            "method": self.method,
            "lmax_used": self.lmax_used,
            "exhausted": self.exhausted,
            "superset": self.superset,
            "levels": self.levels,
            "vertices": self.vertices.to_json(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ReachableSet":
        return cls(
            PointSet.from_json(obj["vertices"]),
            obj["method"],
            obj["lmax_used"],
            obj["exhausted"],
            obj["superset"],
            obj.get("levels", 0),
        )


def _max_len(ps: PointSet) -> int:
    return max((len(l.series) for l in ps.labels if l is not None), default=0)


def lmax_bound(d: int) -> int:
    """Upper bound on the swap-series length needed to reach every vertex."""
    if d < 3:
        raise DimensionError("the length bound is stated for d >= 3")
    if d == 3:
        return 3
    return (math.factorial(d) - 4) // (d - 3)


def default_lmax_cap(d: int) -> int:
    return min(lmax_bound(d), 3 * d * d)


def to_extremal_points(p, ctx: GibbsContext) -> ReachableSet:
    """Vertices of the thermal-operation polytope: one tight state per order."""
    _check_dim(p, ctx)
    d = ctx.dim
    if d > MAX_TO_DIM:
        raise DimensionError(f"d={d} exceeds the d! enumeration cap ({MAX_TO_DIM})")
    c = curve(p, ctx)
    tau = ctx.gibbs
    pts, labels = [], []
    for perm in itertools.permutations(range(d)):
        x = np.concatenate(([0.0], np.cumsum(tau[list(perm)])))
        x[-1] = 1.0
        y = evaluate(c, x)
        q = np.empty(d)
        q[list(perm)] = np.diff(y)
        q[q < 0] = 0.0
        pts.append(q)
        labels.append(VertexLabel((), tuple(i + 1 for i in perm)))
    ps = PointSet.build(pts, labels)
    return ReachableSet(extremal_filter(ps), "to", 0, True, False, 0)


# --------------------------------------------------------------------------
# frontier search


class _SwapTable:
    """Vectorised beta-swaps of one state over every level pair."""

    def __init__(self, ctx: GibbsContext):
        d = ctx.dim
        self.ctx = ctx
        self.pairs = list(itertools.combinations(range(d), 2))
        lo, hi = [], []
        for a, b in self.pairs:
            if ctx.energies[a] > ctx.energies[b]:
                a, b = b, a
            lo.append(a)
            hi.append(b)
        self.lo = np.array(lo)
        self.hi = np.array(hi)
        self.dl = ctx.delta[self.lo, self.hi]
        self.rows = np.arange(len(self.pairs))
        self.index = {pr: i for i, pr in enumerate(self.pairs)}

    def children(self, f: np.ndarray, last: Optional[int]):
        """
        Beta-swaps of ``f`` that can still lead to vertices, as
        ``(pair indices, states)``.

        Skips the immediate repeat of the previous swap, and non-neighbouring
        swaps whose output order is not the transposition of the input
        order (only for inputs without slope ties, where the order is unique).
        """
        tau = self.ctx.gibbs
        g = f / tau
        order = order_from_slopes(g)
        oidx = np.asarray(order) - 1
        seq = g[oidx]
        degenerate = bool(np.any(seq[:-1] - seq[1:] <= EPS_SLOPE * np.maximum(1.0, np.abs(seq[:-1]))))
        q = np.tile(f, (len(self.pairs), 1))
        fl, fh = f[self.lo], f[self.hi]
        q[self.rows, self.lo] = (1 - self.dl) * fl + fh
        q[self.rows, self.hi] = self.dl * fl
        q[q < 0] = 0.0
        keep = np.ones(len(self.pairs), dtype=bool)
        if last is not None:
            keep[last] = False
        if not degenerate:
            pos = np.empty(len(f), dtype=int)
            pos[oidx] = np.arange(len(f))
            pa, pb = pos[self.lo], pos[self.hi]
            far = np.flatnonzero(np.abs(pa - pb) > 1)
            if far.size:
                perm = np.tile(oidx, (far.size, 1))
                r = np.arange(far.size)
                perm[r, pa[far]] = oidx[pb[far]]
                perm[r, pb[far]] = oidx[pa[far]]
                gs = (q[far] / tau)[r[:, None], perm]
                ok = np.all(
                    gs[:, 1:] <= gs[:, :-1] + EPS_SLOPE * np.maximum(1.0, np.abs(gs[:, :-1])), axis=1
                )
                keep[far[~ok]] = False
        sel = np.flatnonzero(keep)
        return sel, q[sel]


class _Search:
    """State shared by both frontier algorithms."""

    def __init__(self, p, ctx: GibbsContext):
        self.ctx = ctx
        self.table = _SwapTable(ctx)
        self.seen = Deduplicator()
        self.states: List[np.ndarray] = []
        self.series: List[SwapSeries] = []
        self.alive: List[bool] = []
        q = np.array(p, dtype=float)
        self._add(q, ())
        self.seen.add(q)

    def _add(self, q, ser) -> int:
        self.states.append(q)
        self.series.append(ser)
        self.alive.append(True)
        return len(self.states) - 1

    def candidates(self, frontier: List[int]):
        """Unseen children of the frontier, in lexicographic series order."""
        out = []
        pairs = self.table.pairs
        for i in frontier:
            ser = self.series[i]
            last = self.table.index[(ser[-1].j - 1, ser[-1].k - 1)] if ser else None
            sel, qs = self.table.children(self.states[i], last)
            fresh = self.seen.add_new(qs)
            for t in np.flatnonzero(fresh):
                a, b = pairs[sel[t]]
                out.append((qs[t], ser + (SwapStep(a + 1, b + 1),)))
        return out

    def snapshot(self):
        return len(self.states), list(self.alive)

    def restore(self, snap):
        n, alive = snap
        del self.states[n:]
        del self.series[n:]
        self.alive = alive

    def result(self, method, exhausted, superset, levels, post_filter=False) -> ReachableSet:
        idx = [i for i, a in enumerate(self.alive) if a]
        pts = [self.states[i] for i in idx]
        labels = [VertexLabel(self.series[i], beta_order(self.states[i], self.ctx)) for i in idx]
        ps = PointSet(np.array(pts), tuple(labels))
        if post_filter:
            ps = extremal_filter(ps)
            superset = False
        return ReachableSet(ps, method, _max_len(ps), exhausted, superset, levels)


def _hull_step(search: _Search, cands, eps: float) -> List[int]:
    """Add candidates and keep only hull vertices of the union."""
    if not cands:
        return []
    alive_idx = [i for i, a in enumerate(search.alive) if a]
    old = np.array([search.states[i] for i in alive_idx])
    fresh = [(q, s) for q, s in cands if not hull_membership(q, old, eps)[0]]
    if not fresh:
        return []
    new_idx = [search._add(q, s) for q, s in fresh]
    idx = alive_idx + new_idx
    pts = np.array([search.states[i] for i in idx])
    # longest series (the new ones) first, so ties keep the shorter one
    test_order = sorted(range(len(idx)), key=lambda t: (len(search.series[idx[t]]), t), reverse=True)
    mask = extremal_mask(pts, test_order, eps)
    for t, i in enumerate(idx):
        search.alive[i] = bool(mask[t])
    return [i for i in new_idx if search.alive[i]]


class _Dominance:
    """Same-order thermo-majorization bookkeeping for the pruning search."""

    def __init__(self, ctx: GibbsContext, eps: float):
        self.ctx = ctx
        self.eps = eps
        # order -> (state indices, cumulative sums along that order)
        self.groups: Dict[tuple, Tuple[List[int], np.ndarray]] = {}

    def key(self, q):
        order = beta_order(q, self.ctx)
        return order, np.cumsum(q[np.asarray(order) - 1])

    def insert(self, idx: int, order, cum):
        ids, cums = self.groups.get(order, ([], np.empty((0, cum.size))))
        self.groups[order] = (ids + [idx], np.vstack([cums, cum]))

    def dominated(self, order, cum) -> bool:
        if order not in self.groups:
            return False
        cums = self.groups[order][1]
        return bool(np.any(np.all(cums >= cum - self.eps, axis=1)))

    def evict(self, search: _Search, order, cum):
        if order not in self.groups:
            return
        ids, cums = self.groups[order]
        beaten = np.all(cum >= cums - self.eps, axis=1)
        if beaten.any():
            for t in np.flatnonzero(beaten):
                search.alive[ids[t]] = False
            keep = ~beaten
            self.groups[order] = ([i for i, k in zip(ids, keep) if k], cums[keep])


def _prune_step(search: _Search, dom: _Dominance, cands) -> List[int]:
    if not cands:
        return []
    qs = np.array([q for q, _ in cands])
    orders = orders_from_slopes(qs / search.ctx.gibbs)
    new_idx = []
    for (q, s), order in zip(cands, orders):
        cum = np.cumsum(q[np.asarray(order) - 1])
        if dom.dominated(order, cum):
            continue
        dom.evict(search, order, cum)
        i = search._add(q, s)
        dom.insert(i, order, cum)
        new_idx.append(i)
    return [i for i in new_idx if search.alive[i]]


def _run(p, ctx, lmax_cap, mode, eps, post_filter=False) -> ReachableSet:
    _check_dim(p, ctx)
    cap = default_lmax_cap(ctx.dim) if lmax_cap is None else int(lmax_cap)
    if cap < 0:
        raise ValueError("lmax_cap must be non-negative")
    search = _Search(p, ctx)
    dom = None
    if mode == "prune":
        dom = _Dominance(ctx, EPS_MAJ)
        order, cum = dom.key(search.states[0])
        dom.insert(0, order, cum)
    frontier = [0]
    level = 0
    exhausted = False
    while True:
        probing = level == cap
        snap = search.snapshot() if probing else None
        cands = search.candidates(frontier)
        if mode == "hull":
            frontier = _hull_step(search, cands, eps)
        else:
            frontier = _prune_step(search, dom, cands)
        if not frontier:
            exhausted = True
            break
        if probing:
            # vertices beyond the cap exist; report the capped set
            search.restore(snap)
            break
        level += 1
    method = "eto-hull" if mode == "hull" else "eto-prune"
    return search.result(method, exhausted, mode == "prune", level, post_filter)


def eto_extremal_hull(p, ctx: GibbsContext, lmax_cap: Optional[int] = None, eps: float = EPS_HULL) -> ReachableSet:
    """
    Vertices of the ETO polytope by frontier growth with hull filtering.

    Each round applies every single beta-swap to the newest vertices and
    keeps the extremal points of the accumulated union.  The search stops
    when a round contributes no new vertex, or after ``lmax_cap`` rounds
    (one extra probe round decides whether the cap cut anything off).
    """
    return _run(p, ctx, lmax_cap, "hull", eps)


def eto_extremal_prune(
    p, ctx: GibbsContext, lmax_cap: Optional[int] = None, post_filter: bool = False
) -> ReachableSet:
    """
    Frontier growth where a state is dropped only if another state with the
    same beta-order thermo-majorizes it.  The result may contain
    non-extremal points unless ``post_filter`` runs a hull filter at the end.
    """
    return _run(p, ctx, lmax_cap, "prune", EPS_HULL, post_filter)


def qutrit_theta_xi(p, ctx: GibbsContext) -> Tuple[PointSet, PointSet]:
    """
    The two candidate families of qutrit vertices, built from the beta-order
    ``(a, b, c)`` of ``p``: at most two distinct neighbouring swaps (always
    vertices) and the three-swap or single non-neighbouring states (vertices
    only when not in the hull of the rest).
    """
    if ctx.dim != 3:
        raise DimensionError("closed-form qutrit sets need d = 3")
    _check_dim(p, ctx)
    a, b, c = beta_order(p, ctx)
    theta = [
        (),
        ((a, b),),
        ((b, c),),
        ((a, b), (a, c)),
        ((b, c), (a, c)),
    ]
    xi = [
        ((a, c),),
        ((a, b), (a, c), (b, c)),
        ((b, c), (a, c), (a, b)),
    ]

    def build(group):
        pts, labels = [], []
        for steps in group:
            ser = tuple(SwapStep(j, k) for j, k in steps)
            q = apply_series(ser, p, ctx)
            pts.append(q)
            labels.append(VertexLabel(ser, beta_order(q, ctx)))
        return PointSet.build(pts, labels)

    return build(theta), build(xi)


def eto_qutrit(p, ctx: GibbsContext) -> ReachableSet:
    theta, xi = qutrit_theta_xi(p, ctx)
    both = PointSet.build(
        np.vstack([theta.points, xi.points]), theta.labels + xi.labels
    )
    ps = extremal_filter(both)
    return ReachableSet(ps, "eto-qutrit", _max_len(ps), True, False, 3)


def is_monotone_order(p, ctx: GibbsContext, eps: float = EPS_SLOPE) -> bool:
    g = p / ctx.gibbs
    d = ctx.dim
    up = tuple(range(1, d + 1))
    return is_valid_order(g, up, eps) or is_valid_order(g, up[::-1], eps)


def eto_monotonic(p, ctx: GibbsContext) -> ReachableSet:
    """
    Vertices for a state whose beta-order is ``(1..d)`` or ``(d..1)``: one
    standard-formation series per target order.
    """
    _check_dim(p, ctx)
    p = np.asarray(p, dtype=float)
    if not is_monotone_order(p, ctx):
        raise PreconditionError(
            f"beta-order {beta_order(p, ctx)} is neither ascending nor descending"
        )
    d = ctx.dim
    g = p / ctx.gibbs
    start = tuple(range(1, d + 1))
    if not is_valid_order(g, start):
        start = start[::-1]
    pts, labels = [], []
    for target in itertools.permutations(range(1, d + 1)):
        ser = standard_formation(start, target)
        q = apply_series(ser, p, ctx)
        pts.append(q)
        labels.append(VertexLabel(ser, beta_order(q, ctx)))
    ps = PointSet.build(pts, labels)
    return ReachableSet(ps, "eto-mono", _max_len(ps), True, False, d * (d - 1) // 2)


def reachable_set(p, ctx: GibbsContext, method: str = "eto-hull", lmax_cap: Optional[int] = None) -> ReachableSet:
    if method == "to":
        return to_extremal_points(p, ctx)
    if method == "eto-hull":
        return eto_extremal_hull(p, ctx, lmax_cap)
    if method == "eto-prune":
        return eto_extremal_prune(p, ctx, lmax_cap)
    if method == "eto-qutrit":
        return eto_qutrit(p, ctx)
    if method == "eto-mono":
        return eto_monotonic(p, ctx)
    raise ValueError(f"unknown method {method!r}; choose from {METHODS}")


def contains(target, rs, eps: float = EPS_HULL):
    """Hull membership of ``target`` in a reachable set (or any PointSet)."""
    pts = rs.vertices if isinstance(rs, ReachableSet) else rs
    return hull_membership(target, pts, eps)


def sample_instance(rng: np.random.Generator, d: int):
    """
    Random test instance: a state uniform on the simplex and energies
    (times beta) drawn uniformly from [0, 1] and sorted.
    """
    p = rng.dirichlet(np.ones(d))
    energies = np.sort(rng.uniform(0.0, 1.0, d))
    return p, GibbsContext.from_energies(energies)
