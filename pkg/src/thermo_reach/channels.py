"""
Two-level thermal channels, swap series and their dynamics.

A series is applied left to right: ``series[0]`` acts first.  The usual
operator-product notation ``beta^(j_l,k_l) ... beta^(j_1,k_1) p`` therefore
corresponds to the list ``[(j_1, k_1), ..., (j_l, k_l)]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from .core import (
    EPS_NEG,
    EPS_SLOPE,
    EPS_SUM,
    BetaOrder,
    DimensionError,
    GibbsContext,
    InvalidLevelError,
    _check_dim,
    check_permutation,
    slopes,
)


@dataclass(frozen=True)
class SwapStep:
    """Two-level channel on levels ``j`` and ``k`` (1-indexed) with strength ``lam``."""

    j: int
    k: int
    lam: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "j", int(self.j))
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "lam", float(self.lam))
        if self.j == self.k:
            raise InvalidLevelError("a swap needs two distinct levels")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lam={self.lam} outside [0, 1]")

    @property
    def is_beta_swap(self) -> bool:
        return self.lam == 1.0

    @property
    def levels(self) -> frozenset:
        return frozenset((self.j, self.k))

    def to_json(self) -> dict:
        return {"j": self.j, "k": self.k, "lam": self.lam}

    @classmethod
    def from_json(cls, obj) -> "SwapStep":
        if isinstance(obj, dict):
            return cls(obj["j"], obj["k"], obj.get("lam", 1.0))
        return cls(*obj)


SwapSeries = Tuple[SwapStep, ...]


def as_series(steps: Iterable) -> SwapSeries:
    """Build a series from SwapSteps, ``(j, k[, lam])`` tuples or JSON dicts."""
    return tuple(s if isinstance(s, SwapStep) else SwapStep.from_json(s) for s in steps)


def series_to_json(series: Sequence[SwapStep]) -> list:
    return [s.to_json() for s in series]


@dataclass(frozen=True)
class StochasticChannel:
    """Column-stochastic matrix acting on population vectors."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError("channel matrix must be square")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def is_stochastic(self, tol: float = EPS_SUM) -> bool:
        m = self.matrix
        return bool(np.all(m >= -EPS_NEG) and np.all(np.abs(m.sum(axis=0) - 1) <= tol))

    def is_gibbs_preserving(self, ctx: GibbsContext, tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.matrix @ ctx.gibbs - ctx.gibbs)) <= tol)

    def then(self, other: "StochasticChannel") -> "StochasticChannel":
        """Channel that applies ``self`` first and ``other`` second."""
        return StochasticChannel(other.matrix @ self.matrix)


def _levels(j: int, k: int, ctx: GibbsContext) -> Tuple[int, int]:
    """0-based pair ordered so that the first level has the lower energy."""
    d = ctx.dim
    if not (1 <= j <= d and 1 <= k <= d):
        raise InvalidLevelError(f"levels ({j}, {k}) outside 1..{d}")
    if j == k:
        raise InvalidLevelError("a swap needs two distinct levels")
    j0, k0 = j - 1, k - 1
    if ctx.energies[j0] > ctx.energies[k0]:
        j0, k0 = k0, j0
    return j0, k0


def partial_swap(j: int, k: int, lam: float, ctx: GibbsContext) -> StochasticChannel:
    SwapStep(j, k, lam)  # validation
    j0, k0 = _levels(j, k, ctx)
    dl = ctx.delta[j0, k0]
    m = np.eye(ctx.dim)
    m[j0, j0] = 1 - lam * dl
    m[j0, k0] = lam
    m[k0, j0] = lam * dl
    m[k0, k0] = 1 - lam
    return StochasticChannel(m)


def beta_swap(j: int, k: int, ctx: GibbsContext) -> StochasticChannel:
    return partial_swap(j, k, 1.0, ctx)


def step_channel(step: SwapStep, ctx: GibbsContext) -> StochasticChannel:
    return partial_swap(step.j, step.k, step.lam, ctx)


def series_channel(series: Sequence[SwapStep], ctx: GibbsContext) -> StochasticChannel:
    m = np.eye(ctx.dim)
    for s in series:
        m = step_channel(s, ctx).matrix @ m
    return StochasticChannel(m)


def _clamp(q: np.ndarray) -> np.ndarray:
    q[(q < 0) & (q >= -EPS_NEG)] = 0.0
    return q


def apply(ch: StochasticChannel, p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.size != ch.dim:
        raise DimensionError(f"state has {p.size} levels, channel has {ch.dim}")
    return _clamp(ch.matrix @ p)


def swap_vector(p: np.ndarray, j0: int, k0: int, lam: float, ctx: GibbsContext) -> np.ndarray:
    """
    Apply a two-level channel to ``p`` directly (0-based levels, any order).

    Equivalent to ``apply(partial_swap(...), p)`` without building the matrix.
    """
    if ctx.energies[j0] > ctx.energies[k0]:
        j0, k0 = k0, j0
    dl = ctx.delta[j0, k0]
    q = np.array(p, dtype=float)
    pj, pk = q[j0], q[k0]
    q[j0] = (1 - lam * dl) * pj + lam * pk
    q[k0] = lam * dl * pj + (1 - lam) * pk
    return _clamp(q)


def apply_step(step: SwapStep, p, ctx: GibbsContext) -> np.ndarray:
    j0, k0 = _levels(step.j, step.k, ctx)
    return swap_vector(p, j0, k0, step.lam, ctx)


def apply_series(series: Sequence[SwapStep], p, ctx: GibbsContext) -> np.ndarray:
    _check_dim(p, ctx)
    q = np.array(p, dtype=float)
    for s in series:
        q = apply_step(s, q, ctx)
    return q


def is_neighbouring(step: SwapStep, p, ctx: GibbsContext, eps: float = EPS_SLOPE) -> bool:
    """
    True if the two levels of ``step`` are adjacent in some beta-order of ``p``.

    Only a level whose slope lies strictly between the two slopes (beyond the
    tie tolerance) can separate them, so fully degenerate states such as the
    Gibbs state make every swap neighbouring.
    """
    _levels(step.j, step.k, ctx)
    g = slopes(p, ctx)
    a, b = g[step.j - 1], g[step.k - 1]
    lo, hi = min(a, b), max(a, b)
    for m in range(ctx.dim):
        if m in (step.j - 1, step.k - 1):
            continue
        tol_lo = eps * max(1.0, abs(lo))
        tol_hi = eps * max(1.0, abs(hi))
        if lo + tol_lo < g[m] < hi - tol_hi:
            return False
    return True


def partial_level_thermalization(levels, lam: float, p, ctx: GibbsContext) -> np.ndarray:
    """Mix the populations of ``levels`` towards their conditional Gibbs distribution."""
    _check_dim(p, ctx)
    idx = sorted({int(i) for i in levels})
    if len(idx) < 2:
        raise InvalidLevelError("need at least two levels")
    if idx[0] < 1 or idx[-1] > ctx.dim:
        raise InvalidLevelError(f"levels {idx} outside 1..{ctx.dim}")
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lam={lam} outside [0, 1]")
    sel = np.asarray(idx) - 1
    q = np.array(p, dtype=float)
    mass = q[sel].sum()
    tau = ctx.gibbs[sel]
    q[sel] = (1 - lam) * q[sel] + lam * mass * tau / tau.sum()
    return q


def standard_formation(pi_from: BetaOrder, pi_to: BetaOrder) -> SwapSeries:
    """
    Canonical no-repetition series of neighbouring swaps taking a state of
    order ``pi_from`` to one of order ``pi_to``.

    For each position j the level wanted there is walked forward from its
    current position m by adjacent swaps with the levels in positions
    m-1, ..., j of the current order.
    """
    if len(pi_from) != len(pi_to):
        raise DimensionError("orders have different lengths")
    d = len(pi_from)
    cur = list(check_permutation(pi_from, d))
    target = check_permutation(pi_to, d)
    steps: List[SwapStep] = []
    for j in range(d - 1):
        m = cur.index(target[j])
        for i in range(m - 1, j - 1, -1):
            steps.append(SwapStep(cur[i], cur[m]))
        cur.insert(j, cur.pop(m))
    return tuple(steps)


def jc_trajectory(p, j: int, k: int, ctx: GibbsContext, samples: int = 101):
    """
    Reduced dynamics of a beta-swap realised by a resonant Jaynes-Cummings
    coupling: ``q(t) = M_{sin^2(g t)} p`` sampled uniformly on ``g t in [0, pi/2]``
    with ``g = 1``.  Returns a list of ``(t, q)`` pairs.
    """
    if samples < 2:
        raise ValueError("samples must be at least 2")
    j0, k0 = _levels(j, k, ctx)
    _check_dim(p, ctx)
    ts = np.linspace(0.0, np.pi / 2, samples)
    lams = np.sin(ts) ** 2
    lams[-1] = 1.0
    return [(float(t), swap_vector(p, j0, k0, float(lam), ctx)) for t, lam in zip(ts, lams)]


def commute(a: SwapStep, b: SwapStep) -> bool:
    return not (a.levels & b.levels)


def trace_equivalent(s1: Sequence[SwapStep], s2: Sequence[SwapStep]) -> bool:
    """
    True if the two series differ only by reordering steps on disjoint levels.

    Two words over a partially commutative alphabet are equivalent iff their
    projections onto every pair of non-commuting letters agree.
    """
    if sorted(map(_key, s1)) != sorted(map(_key, s2)):
        return False
    letters = sorted(set(map(_key, s1)))
    for i, a in enumerate(letters):
        for b in letters[i:]:
            if a != b and not (set(a[:2]) & set(b[:2])):
                continue
            if [_key(s) for s in s1 if _key(s) in (a, b)] != [
                _key(s) for s in s2 if _key(s) in (a, b)
            ]:
                return False
    return True


def _key(s: SwapStep):
    j, k = sorted((s.j, s.k))
    return (j, k, s.lam)


def canonical_ordering(series: Sequence[SwapStep]) -> SwapSeries:
    """
    Representative of the commutation class of ``series``.

    Steps are emitted greedily: among the steps whose non-commuting
    predecessors have all been emitted, the one with the lexicographically
    largest level pair goes next.  Steps on overlapping levels keep their
    relative order, so the resulting state is unchanged.
    """
    rest = list(series)
    out: List[SwapStep] = []
    while rest:
        best = None
        for i, s in enumerate(rest):
            if all(commute(s, t) for t in rest[:i]):
                if best is None or _key(s)[:2] > _key(rest[best])[:2]:
                    best = i
        out.append(rest.pop(best))
    return tuple(out)


def normalize_degenerate(series: Sequence[SwapStep], ctx: GibbsContext) -> SwapSeries:
    """Cancel adjacent repeated beta-swaps between equal-energy levels (involutions)."""
    out: List[SwapStep] = []
    for s in series:
        if (
            out
            and s.is_beta_swap
            and out[-1].is_beta_swap
            and out[-1].levels == s.levels
            and ctx.energies[s.j - 1] == ctx.energies[s.k - 1]
        ):
            out.pop()
        else:
            out.append(s)
    return tuple(out)
