"""
Small dense linear programs in standard form ``A z = b, z >= 0``.

The bundled solver is a two-phase tableau simplex.  Pricing is Dantzig's
most-negative reduced cost; after a run of degenerate pivots it switches
to Bland's smallest-index rule, which cannot cycle.  Problems here have at
most a few dozen rows, so dense numpy pivots are the cheapest option.

An adapter around :func:`scipy.optimize.linprog` (HiGHS) is provided for
cross-checking.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

PIVOT_TOL = 1e-11
COST_TOL = 1e-11
DEGENERATE_STREAK = 25


class SolverFailure(RuntimeError):
    """The solver could not decide the program (iteration limit, breakdown)."""


class Infeasible(Exception):
    pass


class Unbounded(Exception):
    pass


@dataclass
class _Tableau:
    t: np.ndarray  # rows 0..m-1 constraints, row m reduced costs; last column rhs
    basis: np.ndarray

    @property
    def m(self) -> int:
        return self.t.shape[0] - 1

    def pivot(self, r: int, e: int):
        t = self.t
        t[r] /= t[r, e]
        col = t[:, e].copy()
        col[r] = 0.0
        t -= np.outer(col, t[r])
        self.basis[r] = e

    def solution(self, n: int) -> np.ndarray:
        z = np.zeros(n)
        rhs = self.t[:-1, -1]
        for i, b in enumerate(self.basis):
            if b < n:
                z[b] = rhs[i]
        return z

    def run(self, ncols: int, max_iter: int):
        """Minimise the cost row over the first ``ncols`` columns."""
        t = self.t
        m = self.m
        streak = 0
        for _ in range(max_iter):
            cost = t[m, :ncols]
            if streak < DEGENERATE_STREAK:
                e = int(np.argmin(cost))
                if cost[e] >= -COST_TOL:
                    return
            else:
                neg = np.flatnonzero(cost < -COST_TOL)
                if neg.size == 0:
                    return
                e = int(neg[0])
            col = t[:m, e]
            pos = col > PIVOT_TOL
            if not pos.any():
                raise Unbounded()
            ratios = np.full(m, np.inf)
            ratios[pos] = t[:m, -1][pos] / col[pos]
            best = ratios.min()
            ties = np.flatnonzero(ratios <= best + 1e-13 * max(1.0, abs(best)))
            r = int(ties[np.argmin(self.basis[ties])])
            streak = streak + 1 if best <= 1e-13 else 0
            self.pivot(r, e)
        raise SolverFailure(f"simplex did not converge in {max_iter} pivots")


class StandardFormLP:
    """
    Feasible region ``{z >= 0 : A z = b}`` with a cached feasible basis.

    Phase I runs once in the constructor; each :meth:`maximize` call starts
    Phase II from a copy of that basis, so many objectives over the same
    region are cheap.
    """

    def __init__(self, a, b, feas_tol: float = 1e-9, max_iter: Optional[int] = None):
        tab, n, self.max_iter = _phase_one(a, b, max_iter)
        m = tab.m
        self.n = n
        self.phase_one_value = -tab.t[m, -1]
        self.feasible = self.phase_one_value <= feas_tol
        self.point = tab.solution(n)
        if not self.feasible:
            self._tab = None
            return
        # drive remaining artificials out of the basis; drop redundant rows
        keep = []
        for i in range(m):
            if tab.basis[i] >= n:
                row = np.abs(tab.t[i, :n])
                j = int(np.argmax(row))
                if row[j] > 1e-9:
                    tab.pivot(i, j)
                    keep.append(i)
            else:
                keep.append(i)
        rows = keep + [m]
        cols = list(range(n)) + [n + m]
        self._tab = _Tableau(tab.t[np.ix_(rows, cols)].copy(), tab.basis[keep].copy())
        self.point = self._tab.solution(n)

    def maximize(self, c) -> tuple:
        """Return ``(z, value)`` maximising ``c . z``; raises Infeasible or Unbounded."""
        if not self.feasible:
            raise Infeasible()
        tab = _Tableau(self._tab.t.copy(), self._tab.basis.copy())
        cost = -np.asarray(c, dtype=float)
        m = tab.m
        cb = cost[tab.basis]
        tab.t[m, :-1] = cost - cb @ tab.t[:m, :-1]
        tab.t[m, -1] = -cb @ tab.t[:m, -1]
        tab.run(self.n, self.max_iter)
        z = tab.solution(self.n)
        return z, float(np.dot(c, z))


def _phase_one(a, b, max_iter=None):
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float).ravel()
    m, n = a.shape
    flip = b < 0
    a[flip] *= -1
    b[flip] *= -1
    max_iter = max_iter or 50 * (m + n) + 100
    t = np.zeros((m + 1, n + m + 1))
    t[:m, :n] = a
    t[:m, n : n + m] = np.eye(m)
    t[:m, -1] = b
    t[m, :n] = -a.sum(axis=0)
    t[m, -1] = -b.sum()
    tab = _Tableau(t, np.arange(n, n + m))
    tab.run(n + m, max_iter)
    return tab, n, max_iter


def phase_one_point(a, b) -> np.ndarray:
    """
    Basic solution minimising the total constraint violation of
    ``A z = b, z >= 0``.  Callers judge feasibility from the residual.
    """
    tab, n, _ = _phase_one(a, b)
    return tab.solution(n)


def maximize(c, a, b, solver: str = "simplex"):
    """Maximise ``c . z`` over ``{z >= 0 : A z = b}``; returns ``(z, value)``."""
    if solver == "highs":
        return _highs_max(c, a, b)
    if solver != "simplex":
        raise ValueError(f"unknown solver {solver!r}")
    return StandardFormLP(a, b).maximize(c)


def _highs_max(c, a, b):
    from scipy.optimize import linprog

    res = linprog(-np.asarray(c, dtype=float), A_eq=a, b_eq=b, bounds=(0, None), method="highs")
    if res.status == 2:
        raise Infeasible()
    if res.status == 3:
        raise Unbounded()
    if res.status != 0:
        raise SolverFailure(res.message)
    return res.x, float(-res.fun)
