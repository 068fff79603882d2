"""
Hamiltonians, Gibbs contexts, population vectors and beta-orders.

Energies are stored pre-multiplied by the inverse temperature, so every
quantity in the package is dimensionless.  Level labels are 1-indexed in
all public interfaces.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np

EPS_SUM = 1e-12
EPS_NEG = 1e-14
EPS_SLOPE = 1e-9
EPS_MAJ = 1e-10
EPS_HULL = 1e-9
EPS_DEDUP = 1e-10
EPS_CAT = 1e-9
EPS_ALPHA = 1e-9

# permutation of level labels 1..d, slopes non-increasing along it
BetaOrder = Tuple[int, ...]


class DegeneracyWarning(UserWarning):
    """A result may depend on how tied slopes are ordered."""


class DimensionError(ValueError):
    pass


class InvalidLevelError(ValueError):
    pass


@dataclass(frozen=True)
class Hamiltonian:
    """Diagonal Hamiltonian given by its energies times beta."""

    energies: np.ndarray

    def __post_init__(self):
        e = np.array(self.energies, dtype=float).ravel()
        if e.size < 2:
            raise DimensionError("a Hamiltonian needs at least two levels")
        if not np.all(np.isfinite(e)):
            raise ValueError("energies must be finite")
        e.setflags(write=False)
        object.__setattr__(self, "energies", e)

    @property
    def dim(self) -> int:
        return self.energies.size

    def canonical(self) -> "Hamiltonian":
        return Hamiltonian(np.sort(self.energies))


@dataclass(frozen=True)
class GibbsContext:
    """
    Thermal reference data for a fixed Hamiltonian.

    Attributes
    ----------
    hamiltonian : Hamiltonian
    gibbs : numpy.ndarray
        Gibbs populations ``exp(-beta E_i) / Z``.
    delta : numpy.ndarray
        Boltzmann ratios ``delta[j, k] = exp(beta E_j - beta E_k)``.
    partition_log : float
        ``log Z``.
    """

    hamiltonian: Hamiltonian
    gibbs: np.ndarray = field(init=False, repr=False)
    delta: np.ndarray = field(init=False, repr=False)
    partition_log: float = field(init=False)

    def __post_init__(self):
        e = self.hamiltonian.energies
        shift = e.min()
        w = np.exp(-(e - shift))
        z = w.sum()
        gibbs = w / z
        delta = np.exp(e[:, None] - e[None, :])
        for arr in (gibbs, delta):
            arr.setflags(write=False)
        object.__setattr__(self, "gibbs", gibbs)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "partition_log", float(np.log(z) - shift))

    @classmethod
    def from_energies(cls, beta_energies: Sequence[float]) -> "GibbsContext":
        return cls(Hamiltonian(np.asarray(beta_energies, dtype=float)))

    @property
    def energies(self) -> np.ndarray:
        return self.hamiltonian.energies

    @property
    def dim(self) -> int:
        return self.hamiltonian.dim

    def to_json(self) -> dict:
        return {"beta_energies": [float(x) for x in self.energies]}

    @classmethod
    def from_json(cls, obj: dict) -> "GibbsContext":
        return cls.from_energies(obj["beta_energies"])


def population(probs, eps_sum: float = EPS_SUM, eps_neg: float = EPS_NEG) -> np.ndarray:
    """
    Validate a population vector and return it as a read-only float array.

    Entries in ``[-eps_neg, 0)`` are clamped to zero; anything more negative,
    or a total that misses 1 by more than ``eps_sum``, raises ``ValueError``.
    """
    p = np.array(probs, dtype=float).ravel()
    if p.size < 1 or not np.all(np.isfinite(p)):
        raise ValueError("population vector must be finite and non-empty")
    if np.any(p < -eps_neg):
        raise ValueError(f"negative population {p.min():.3e}")
    p[p < 0] = 0.0
    if abs(p.sum() - 1.0) > eps_sum:
        raise ValueError(f"populations sum to {p.sum():.15g}, not 1")
    p.setflags(write=False)
    return p


def population_to_json(p) -> dict:
    return {"probs": [float(x) for x in p]}


def population_from_json(obj: dict) -> np.ndarray:
    return population(obj["probs"])


def gibbs_state(h: Hamiltonian) -> np.ndarray:
    return GibbsContext(h).gibbs


def _check_dim(p, ctx: GibbsContext):
    if len(p) != ctx.dim:
        raise DimensionError(f"state has {len(p)} levels, context has {ctx.dim}")


def slopes(p, ctx: GibbsContext) -> np.ndarray:
    _check_dim(p, ctx)
    return np.asarray(p, dtype=float) / ctx.gibbs


def _tied(a: float, b: float, eps: float) -> bool:
    return abs(a - b) <= eps * max(1.0, abs(a))


def order_from_slopes(g: np.ndarray, eps: float = EPS_SLOPE) -> BetaOrder:
    """Sort levels by slope, descending; tied slopes go by ascending index."""
    idx = np.argsort(-g, kind="stable")
    srt = g[idx]
    gaps = srt[:-1] - srt[1:]
    if np.all(gaps > eps * np.maximum(1.0, np.abs(srt[:-1]))):
        return tuple((idx + 1).tolist())
    out = []
    group = [idx[0]]
    for i in idx[1:]:
        if _tied(g[group[0]], g[i], eps):
            group.append(i)
        else:
            out.extend(sorted(group))
            group = [i]
    out.extend(sorted(group))
    return tuple(int(i) + 1 for i in out)


def orders_from_slopes(g: np.ndarray, eps: float = EPS_SLOPE):
    """Row-wise :func:`order_from_slopes` for a 2-D array of slopes."""
    idx = np.argsort(-g, axis=1, kind="stable")
    srt = np.take_along_axis(g, idx, axis=1)
    gaps = srt[:, :-1] - srt[:, 1:]
    clean = np.all(gaps > eps * np.maximum(1.0, np.abs(srt[:, :-1])), axis=1)
    rows = (idx + 1).tolist()
    return [tuple(r) if ok else order_from_slopes(gr, eps) for r, ok, gr in zip(rows, clean, g)]


def beta_order(p, ctx: GibbsContext, eps: float = EPS_SLOPE) -> BetaOrder:
    """Canonical beta-order of ``p`` (1-indexed level labels)."""
    return order_from_slopes(slopes(p, ctx), eps)


def has_slope_ties(p, ctx: GibbsContext, eps: float = EPS_SLOPE) -> bool:
    g = np.sort(slopes(p, ctx))[::-1]
    return any(_tied(a, b, eps) for a, b in zip(g[:-1], g[1:]))


def is_valid_order(g: np.ndarray, order: Sequence[int], eps: float = EPS_SLOPE) -> bool:
    """True if slopes along ``order`` (1-indexed) are non-increasing within ``eps``."""
    s = g[np.asarray(order) - 1]
    return bool(np.all(s[1:] <= s[:-1] + eps * np.maximum(1.0, np.abs(s[:-1]))))


def warn_if_degenerate(p, ctx: GibbsContext, what: str, eps: float = EPS_SLOPE):
    if has_slope_ties(p, ctx, eps):
        warnings.warn(
            f"{what}: input has tied slopes; result uses the ascending-index tie-break",
            DegeneracyWarning,
            stacklevel=3,
        )


def check_permutation(order: Sequence[int], d: int) -> BetaOrder:
    order = tuple(int(i) for i in order)
    if sorted(order) != list(range(1, d + 1)):
        raise DimensionError(f"{order} is not a permutation of 1..{d}")
    return order
