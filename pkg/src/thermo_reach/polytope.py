"""Convex-geometry kernel: hull membership, extremal filtering and affine slices."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import null_space

from .channels import SwapSeries, as_series, series_to_json
from .core import EPS_DEDUP, EPS_HULL, BetaOrder, DimensionError
from .lp import Infeasible, SolverFailure, StandardFormLP, phase_one_point


class EmptySliceError(ValueError):
    """No point of the requested affine slice lies in the hull."""


@dataclass(frozen=True)
class VertexLabel:
    series: SwapSeries = ()
    order: Optional[BetaOrder] = None

    def priority(self) -> tuple:
        """Smaller is preferred: shorter series, then lexicographic steps."""
        return (len(self.series), [(s.j, s.k, s.lam) for s in self.series])

    def to_json(self) -> dict:
        return {
            "series": series_to_json(self.series),
            "order": None if self.order is None else list(self.order),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "VertexLabel":
        order = obj.get("order")
        return cls(as_series(obj.get("series", [])), None if order is None else tuple(order))


def _label_priority(label) -> tuple:
    return label.priority() if label is not None else (0, [])


class Deduplicator:
    """
    Incremental L-infinity deduplication.

    Points are hashed onto a grid of pitch ``10**-digits``; a coordinate that
    falls close to a cell boundary also probes the neighbouring cell, so two
    points within ``eps`` are always compared.
    """

    def __init__(self, eps: float = EPS_DEDUP, digits: int = 7):
        self.eps = eps
        self.scale = 10.0**digits
        self.cells: Dict[tuple, List[int]] = {}
        self.points: List[np.ndarray] = []

    def _keys(self, x: np.ndarray):
        s = x * self.scale
        base = np.floor(s)
        frac = s - base
        margin = self.eps * self.scale + 1e-6
        key = tuple(base.astype(np.int64).tolist())
        near = (frac < margin) | (frac > 1 - margin)
        if not near.any():
            return key, (key,)
        opts = []
        for b, f, n in zip(key, frac.tolist(), near.tolist()):
            o = [b]
            if n:
                o.append(b - 1 if f < margin else b + 1)
            opts.append(o)
        return key, itertools.product(*opts)

    def find(self, x: np.ndarray) -> int:
        """Index of a stored point within ``eps`` of ``x``, or -1."""
        _, probes = self._keys(x)
        for key in probes:
            for i in self.cells.get(key, ()):
                if np.max(np.abs(self.points[i] - x)) <= self.eps:
                    return i
        return -1

    def add(self, x: np.ndarray) -> int:
        key, _ = self._keys(x)
        return self._store(key, x)

    def _store(self, key, x) -> int:
        self.points.append(x)
        idx = len(self.points) - 1
        self.cells.setdefault(key, []).append(idx)
        return idx

    def add_new(self, rows: np.ndarray) -> np.ndarray:
        """Store the rows not yet present (also against each other); mask of stored rows."""
        s = rows * self.scale
        base = np.floor(s)
        frac = s - base
        margin = self.eps * self.scale + 1e-6
        near = ((frac < margin) | (frac > 1 - margin)).any(axis=1)
        keys = base.astype(np.int64).tolist()
        fresh = np.zeros(len(rows), dtype=bool)
        for r, x in enumerate(rows):
            key = tuple(keys[r])
            if near[r]:
                if self.find(x) >= 0:
                    continue
            else:
                hit = False
                for i in self.cells.get(key, ()):
                    if np.max(np.abs(self.points[i] - x)) <= self.eps:
                        hit = True
                        break
                if hit:
                    continue
            self._store(key, x)
            fresh[r] = True
        return fresh


@dataclass(frozen=True)
class PointSet:
    """Deduplicated points with optional generating-series labels."""

    points: np.ndarray
    labels: Tuple[Optional[VertexLabel], ...] = ()

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2:
            raise DimensionError("points must be a 2-D array")
        labels = tuple(self.labels) if self.labels else (None,) * len(pts)
        if len(labels) != len(pts):
            raise ValueError("one label per point required")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def build(cls, points, labels=None, eps: float = EPS_DEDUP) -> "PointSet":
        """Deduplicate; merged duplicates keep the preferred label."""
        dd = Deduplicator(eps)
        kept_pts: List[np.ndarray] = []
        kept_lab: List[Optional[VertexLabel]] = []
        labels = list(labels) if labels is not None else [None] * len(points)
        for x, lab in zip(points, labels):
            x = np.asarray(x, dtype=float)
            i = dd.find(x)
            if i < 0:
                dd.add(x)
                kept_pts.append(x)
                kept_lab.append(lab)
            elif _label_priority(lab) < _label_priority(kept_lab[i]):
                kept_lab[i] = lab
        dim = len(points[0]) if len(points) else 0
        return cls(np.array(kept_pts).reshape(-1, dim), tuple(kept_lab))

    def __len__(self) -> int:
        return len(self.points)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def subset(self, idx: Sequence[int]) -> "PointSet":
        idx = list(idx)
        return PointSet(self.points[idx].reshape(-1, self.dim), tuple(self.labels[i] for i in idx))

    def to_json(self) -> dict:
        return {
            "points": self.points.tolist(),
            "labels": [None if l is None else l.to_json() for l in self.labels],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "PointSet":
        labels = obj.get("labels") or [None] * len(obj["points"])
        return cls(
            np.array(obj["points"], dtype=float),
            tuple(None if l is None else VertexLabel.from_json(l) for l in labels),
        )


def _as_matrix(s) -> np.ndarray:
    return s.points if isinstance(s, PointSet) else np.atleast_2d(np.asarray(s, dtype=float))


def hull_membership(x, s, eps: float = EPS_HULL):
    """
    Decide whether ``x`` is a convex combination of the points of ``s``.

    Returns ``(inside, weights)``; ``weights`` reconstruct ``x`` to ``eps``
    in the max norm and is ``None`` when ``x`` is outside.
    """
    pts = _as_matrix(s)
    x = np.asarray(x, dtype=float)
    if pts.shape[0] == 0:
        raise ValueError("empty point set")
    if pts.shape[1] != x.size:
        raise DimensionError(f"point has {x.size} coordinates, set has {pts.shape[1]}")
    gaps = np.max(np.abs(pts - x), axis=1)
    hit = int(np.argmin(gaps))
    if gaps[hit] <= eps:
        w = np.zeros(len(pts))
        w[hit] = 1.0
        return True, w
    if len(pts) == 1:
        return False, None
    # cheap separation: a coordinate outside the bounding box
    if np.any(x < pts.min(axis=0) - eps) or np.any(x > pts.max(axis=0) + eps):
        return False, None
    a = np.vstack([pts.T, np.ones(len(pts))])
    b = np.append(x, 1.0)
    w = np.clip(phase_one_point(a, b), 0.0, None)
    if np.max(np.abs(a @ w - b)) <= eps:
        return True, w
    return False, None


def extremal_mask(points: np.ndarray, test_order: Sequence[int], eps: float = EPS_HULL) -> np.ndarray:
    """
    Boolean mask of the points that are not convex combinations of the others.

    Points are removed one at a time in ``test_order``; since a removed point
    lies in the hull of the survivors, the survivors' hull never changes.
    """
    n = len(points)
    alive = np.ones(n, dtype=bool)
    if n <= 1:
        return alive
    for i in test_order:
        alive[i] = False
        try:
            inside, _ = hull_membership(points[i], points[alive], eps)
        except SolverFailure as exc:
            raise SolverFailure(f"extremal_filter: point {i}: {exc}") from exc
        if not inside:
            alive[i] = True
    return alive


def extremal_filter(s: PointSet, eps: float = EPS_HULL) -> PointSet:
    """
    Keep exactly the points that are not convex combinations of the others.

    The least preferred labels are tested first, so among near-coincident
    points the one with the shorter generating series survives.
    """
    order = sorted(range(len(s)), key=lambda i: _label_priority(s.labels[i]), reverse=True)
    return s.subset(np.flatnonzero(extremal_mask(s.points, order, eps)))


def simplex_basis(k: int) -> np.ndarray:
    """Orthonormal basis (k x (k-1)) of the directions that keep the total fixed."""
    return null_space(np.ones((1, k)))


def slice_vertices(
    s,
    embed: Optional[np.ndarray] = None,
    dims: Optional[int] = None,
    directions: int = 720,
    angle_tol: float = 1e-6,
    seed: int = 0,
    eps: float = EPS_HULL,
) -> PointSet:
    """
    Vertices of ``R = {q : sum(q) = 1, embed @ q in conv(s)}``.

    ``embed`` is a linear map from the k-dimensional q-space into the space
    of ``s`` (identity when omitted).  Support points of ``R`` are found by
    maximising ``u . q`` over a set of directions ``u``: a uniform angular
    grid refined by bisection when ``dims == 2``, the two signs when
    ``dims == 1`` and seeded random directions otherwise.
    """
    pts = _as_matrix(s)
    n, big = pts.shape
    emb = np.eye(big) if embed is None else np.asarray(embed, dtype=float)
    if emb.shape[0] != big:
        raise DimensionError("embedding does not map into the point space")
    k = emb.shape[1]
    dims = k - 1 if dims is None else dims
    # variables: weights w (n), q+ (k), q- (k)
    a = np.zeros((big + 2, n + 2 * k))
    a[:big, :n] = pts.T
    a[:big, n : n + k] = -emb
    a[:big, n + k :] = emb
    a[big, :n] = 1.0
    a[big + 1, n : n + k] = 1.0
    a[big + 1, n + k :] = -1.0
    b = np.zeros(big + 2)
    b[big] = b[big + 1] = 1.0
    lp = StandardFormLP(a, b, feas_tol=eps)
    if not lp.feasible:
        raise EmptySliceError("the slice does not meet the hull")

    basis = simplex_basis(k)[:, :dims] if dims < k - 1 else simplex_basis(k)

    def support(v: np.ndarray) -> np.ndarray:
        u = basis @ v
        try:
            z, _ = lp.maximize(np.concatenate([np.zeros(n), u, -u]))
        except Infeasible as exc:  # pragma: no cover - guarded above
            raise EmptySliceError(str(exc)) from exc
        return z[n : n + k] - z[n + k :]

    found: List[np.ndarray] = []
    if dims <= 0:
        found.append(lp.point[n : n + k] - lp.point[n + k :])
    elif dims == 1:
        found += [support(np.array([1.0])), support(np.array([-1.0]))]
    elif dims == 2:
        found += _polygon_support(support, directions, angle_tol)
    else:
        rng = np.random.default_rng(seed)
        v = rng.normal(size=(directions, basis.shape[1]))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        found += [support(row) for row in v]
    cand = PointSet.build(found, eps=max(eps, EPS_DEDUP))
    return extremal_filter(cand, eps)


def _polygon_support(support: Callable, directions: int, angle_tol: float) -> List[np.ndarray]:
    def at(theta):
        return support(np.array([math.cos(theta), math.sin(theta)]))

    def same(u, v):
        return np.max(np.abs(u - v)) <= 1e-9

    thetas = np.linspace(0.0, 2 * math.pi, directions, endpoint=False)
    grid = [at(t) for t in thetas]
    out = list(grid)
    stack = []
    for i in range(directions):
        j = (i + 1) % directions
        t_hi = thetas[j] if j else 2 * math.pi
        if not same(grid[i], grid[j]):
            stack.append((thetas[i], grid[i], t_hi, grid[j]))
    while stack:
        ta, qa, tb, qb = stack.pop()
        if tb - ta < angle_tol:
            continue
        tm = 0.5 * (ta + tb)
        qm = at(tm)
        if same(qm, qa):
            stack.append((tm, qm, tb, qb))
        elif same(qm, qb):
            stack.append((ta, qa, tm, qm))
        else:
            out.append(qm)
            stack.append((ta, qa, tm, qm))
            stack.append((tm, qm, tb, qb))
    return out


def barycentric(p) -> Tuple[float, float]:
    """Planar coordinates of a qutrit state: level 1 at the origin, level 2 at (1, 0)."""
    p = np.asarray(p, dtype=float)
    if p.size != 3:
        raise DimensionError("barycentric coordinates need a 3-level state")
    return float(p[1] + p[2] / 2), float(math.sqrt(3) / 2 * p[2])
