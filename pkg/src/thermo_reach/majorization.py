"""Thermo-majorization curves and the induced pre-order."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import EPS_MAJ, BetaOrder, GibbsContext, _check_dim, beta_order


@dataclass(frozen=True)
class MajorizationCurve:
    """
    Concave piecewise-linear curve through the cumulative (gibbs, population)
    sums taken along a beta-order.  ``x`` and ``y`` hold the d+1 elbows,
    starting at the origin.
    """

    x: np.ndarray
    y: np.ndarray
    order: BetaOrder

    @property
    def elbows(self):
        return list(zip(self.x.tolist(), self.y.tolist()))

    @property
    def segment_slopes(self) -> np.ndarray:
        return np.diff(self.y) / np.diff(self.x)


def curve(p, ctx: GibbsContext, order: BetaOrder | None = None) -> MajorizationCurve:
    _check_dim(p, ctx)
    if order is None:
        order = beta_order(p, ctx)
    idx = np.asarray(order) - 1
    x = np.concatenate(([0.0], np.cumsum(ctx.gibbs[idx])))
    y = np.concatenate(([0.0], np.cumsum(np.asarray(p, dtype=float)[idx])))
    x[-1] = 1.0  # round-off in the gibbs sum
    x.setflags(write=False)
    y.setflags(write=False)
    return MajorizationCurve(x, y, tuple(order))


def evaluate(c: MajorizationCurve, a, tol: float = 1e-12):
    a_arr = np.asarray(a, dtype=float)
    if np.any(a_arr < -tol) or np.any(a_arr > 1 + tol):
        raise ValueError("curve argument must lie in [0, 1]")
    out = np.interp(np.clip(a_arr, 0.0, 1.0), c.x, c.y)
    return float(out) if out.ndim == 0 else out


def majorizes(p, q, ctx: GibbsContext, eps: float = EPS_MAJ) -> bool:
    """
    True if ``p`` thermo-majorizes ``q``.

    Both curves are concave and piecewise linear, so it suffices to compare
    them at the elbows of the curve of ``q``.
    """
    cp = curve(p, ctx)
    cq = curve(q, ctx)
    return bool(np.all(evaluate(cp, cq.x) >= cq.y - eps))


def tightly_majorizes(p, q, ctx: GibbsContext, eps: float = EPS_MAJ) -> bool:
    """True if every elbow of the curve of ``q`` lies on the curve of ``p``."""
    cp = curve(p, ctx)
    cq = curve(q, ctx)
    return bool(np.all(np.abs(evaluate(cp, cq.x) - cq.y) <= eps))
