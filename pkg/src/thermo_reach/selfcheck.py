"""Built-in randomized property checks, run by ``thermo-reach verify``."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List

import numpy as np

from .channels import SwapStep, apply_step, is_neighbouring, partial_swap, series_channel
from .core import GibbsContext
from .majorization import tightly_majorizes
from .reach import eto_extremal_hull, qutrit_theta_xi, sample_instance


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: int
    failed: int

    @property
    def ok(self) -> bool:
        return self.failed == 0

    def to_json(self) -> dict:
        return {"name": self.name, "passed": self.passed, "failed": self.failed}


def _random_ctx(rng, d):
    return GibbsContext.from_energies(np.sort(rng.uniform(0, 1, d)))


def _pair(rng, d):
    j, k = rng.choice(d, 2, replace=False) + 1
    return int(j), int(k)


def check_gibbs_preservation(rng, n):
    fails = 0
    for _ in range(n):
        d = int(rng.integers(2, 8))
        ctx = _random_ctx(rng, d)
        j, k = _pair(rng, d)
        ch = partial_swap(j, k, float(rng.uniform()), ctx)
        if not (ch.is_gibbs_preserving(ctx, 1e-12) and ch.is_stochastic(1e-12)):
            fails += 1
    return fails


def check_double_swap(rng, n):
    fails = 0
    for _ in range(n):
        d = int(rng.integers(2, 6))
        ctx = _random_ctx(rng, d)
        j, k = _pair(rng, d)
        twice = series_channel([SwapStep(j, k), SwapStep(j, k)], ctx).matrix
        lo, hi = sorted((j - 1, k - 1), key=lambda i: ctx.energies[i])
        once = partial_swap(j, k, 1 - ctx.delta[lo, hi], ctx).matrix
        fails += np.max(np.abs(twice - once)) > 1e-14
    return fails


def check_disjoint_commute(rng, n):
    fails = 0
    for _ in range(n):
        d = int(rng.integers(4, 7))
        ctx = _random_ctx(rng, d)
        a, b, c, e = (int(x) + 1 for x in rng.choice(d, 4, replace=False))
        s1 = series_channel([SwapStep(a, b), SwapStep(c, e)], ctx).matrix
        s2 = series_channel([SwapStep(c, e), SwapStep(a, b)], ctx).matrix
        fails += np.max(np.abs(s1 - s2)) > 1e-14
    return fails


def check_triple_identity(rng, n):
    fails = 0
    for _ in range(n):
        d = int(rng.integers(3, 6))
        ctx = _random_ctx(rng, d)
        k, l, m = sorted(int(x) + 1 for x in rng.choice(d, 3, replace=False))
        left = series_channel([SwapStep(l, m), SwapStep(k, m), SwapStep(k, l)], ctx).matrix
        right = series_channel([SwapStep(k, l), SwapStep(k, m), SwapStep(l, m)], ctx).matrix
        fails += np.max(np.abs(left - right)) > 1e-14
    return fails


def check_neighbouring_tight(rng, n):
    fails = 0
    for _ in range(n):
        d = int(rng.integers(2, 6))
        p, ctx = sample_instance(rng, d)
        j, k = _pair(rng, d)
        step = SwapStep(j, k)
        if is_neighbouring(step, p, ctx):
            fails += not tightly_majorizes(p, apply_step(step, p, ctx), ctx)
    return fails


def check_qutrit_sandwich(rng, n):
    fails = 0
    for _ in range(n):
        p, ctx = sample_instance(rng, 3)
        ext = eto_extremal_hull(p, ctx).points
        theta, xi = qutrit_theta_xi(p, ctx)
        allowed = np.vstack([theta.points, xi.points])

        def within(a, b):
            return all(np.min(np.max(np.abs(b - x), axis=1)) <= 1e-10 for x in a)

        fails += not (within(theta.points, ext) and within(ext, allowed) and len(ext) <= 8)
    return fails


CHECKS: List[tuple] = [
    ("gibbs-preservation", check_gibbs_preservation),
    ("double-swap", check_double_swap),
    ("disjoint-commutation", check_disjoint_commute),
    ("triple-identity", check_triple_identity),
    ("neighbouring-tight", check_neighbouring_tight),
    ("qutrit-sandwich", check_qutrit_sandwich),
]


def run_checks(samples: int = 200, seed: int = 0) -> List[CheckResult]:
    out = []
    for name, fn in CHECKS:
        rng = np.random.default_rng([seed, len(out)])
        failed = int(fn(rng, samples))
        out.append(CheckResult(name, samples - failed, failed))
    return out
