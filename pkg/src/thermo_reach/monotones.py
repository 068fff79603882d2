"""Rényi divergences, generalized free energies and information quantities."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np
from scipy.special import logsumexp, xlogy

from .core import EPS_ALPHA, DimensionError, GibbsContext, _check_dim

DEFAULT_ALPHAS = (0.0, 0.5, 1.0, 2.0, 50.0)


def renyi_divergence(p, tau, alpha: float, eps_alpha: float = EPS_ALPHA) -> float:
    """
    Classical Rényi divergence ``D_alpha(p || tau)`` in nats.

    ``alpha == 1`` returns the relative entropy and ``alpha == 0`` the
    ``-log`` of the Gibbs weight on the support of ``p``.  Orders within
    ``eps_alpha`` of 1 (but not equal to it) are rejected because the
    closed form loses all precision there.  Zero populations give ``+inf``
    for negative orders.
    """
    p = np.asarray(p, dtype=float)
    tau = np.asarray(tau, dtype=float)
    if p.shape != tau.shape:
        raise DimensionError("p and tau differ in dimension")
    alpha = float(alpha)
    if alpha == 1.0:
        return float(np.sum(xlogy(p, p) - xlogy(p, tau)))
    if abs(alpha - 1.0) < eps_alpha:
        raise ValueError(f"alpha={alpha!r} too close to 1; use alpha=1")
    support = p > 0
    if alpha == 0.0:
        return float(-np.log(tau[support].sum()))
    if alpha < 0 and not np.all(support):
        return float("inf")
    ps, ts = p[support], tau[support]
    lse = logsumexp(alpha * np.log(ps) + (1 - alpha) * np.log(ts))
    return float(np.sign(alpha) / (alpha - 1) * lse)


def free_energy_alpha(p, ctx: GibbsContext, alpha: float) -> float:
    """Generalized free energy in units of the temperature (``beta F_alpha``)."""
    _check_dim(p, ctx)
    return renyi_divergence(p, ctx.gibbs, alpha) - ctx.partition_log


def nonequilibrium_free_energy(p, ctx: GibbsContext) -> float:
    """``<beta E> - S(p)``."""
    _check_dim(p, ctx)
    p = np.asarray(p, dtype=float)
    return float(p @ ctx.energies + np.sum(xlogy(p, p)))


def shannon_entropy(p) -> float:
    p = np.asarray(p, dtype=float)
    return float(-np.sum(xlogy(p, p)))


def marginals(joint, d_sys: int, d_cat: int):
    """System and catalyst marginals of a flat joint vector (system index major)."""
    joint = np.asarray(joint, dtype=float)
    if joint.size != d_sys * d_cat:
        raise DimensionError(f"joint has {joint.size} entries, expected {d_sys * d_cat}")
    m = joint.reshape(d_sys, d_cat)
    return m.sum(axis=1), m.sum(axis=0)


def mutual_information(joint, d_sys: int, d_cat: int) -> float:
    ps, pc = marginals(joint, d_sys, d_cat)
    return shannon_entropy(ps) + shannon_entropy(pc) - shannon_entropy(joint)


@dataclass(frozen=True)
class MonotoneReport:
    """
    ``beta F_alpha`` of a state on a grid of orders, plus the ``alpha -> 1`` value.

    Negative orders are left out of the default grid since any zero
    population sends them to infinity.
    """

    alpha_grid: List[float]
    values: List[float]
    f1: float = field(default=float("nan"))

    @classmethod
    def of(cls, p, ctx: GibbsContext, alphas: Sequence[float] = DEFAULT_ALPHAS) -> "MonotoneReport":
        alphas = [float(a) for a in alphas]
        vals = [free_energy_alpha(p, ctx, a) for a in alphas]
        return cls(alphas, vals, nonequilibrium_free_energy(p, ctx))

    def to_json(self) -> dict:
        return {"alpha_grid": list(self.alpha_grid), "values": list(self.values), "f1": self.f1}

    @classmethod
    def from_json(cls, obj: dict) -> "MonotoneReport":
        return cls(list(obj["alpha_grid"]), list(obj["values"]), obj["f1"])
