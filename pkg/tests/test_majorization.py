import numpy as np
import pytest
from hypothesis import given, settings
from scipy.optimize import linprog

from thermo_reach.channels import SwapStep, apply_series, partial_swap, apply
from thermo_reach.majorization import curve, evaluate, majorizes, tightly_majorizes

from conftest import P1, instances, rng_for


def gibbs_preserving_map_exists(p, q, tau):
    """Feasibility of a column-stochastic G with G tau = tau and G p = q (linprog oracle)."""
    d = len(p)
    rows, rhs = [], []
    for i in range(d):  # columns sum to one
        r = np.zeros((d, d))
        r[:, i] = 1
        rows.append(r.ravel())
        rhs.append(1.0)
    for vec, out in ((tau, tau), (p, q)):
        for i in range(d):
            r = np.zeros((d, d))
            r[i, :] = vec
            rows.append(r.ravel())
            rhs.append(out[i])
    res = linprog(np.zeros(d * d), A_eq=np.array(rows), b_eq=np.array(rhs), bounds=(0, None), method="highs")
    return res.status == 0


def test_curve_elbows_for_named_state(ctx3):
    c = curve(P1, ctx3)
    assert c.order == (2, 1, 3)
    np.testing.assert_allclose(c.y, [0, 0.55, 0.9, 1.0])
    assert c.x[-1] == 1.0
    assert np.all(np.diff(c.segment_slopes) <= 1e-12)


def test_evaluate_rejects_out_of_range(ctx3):
    c = curve(P1, ctx3)
    assert evaluate(c, 0.0) == 0.0
    assert evaluate(c, 1.0) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        evaluate(c, 1.5)


def test_everything_majorizes_gibbs(ctx3):
    assert majorizes(P1, ctx3.gibbs, ctx3)
    assert not majorizes(ctx3.gibbs, P1, ctx3)


def test_pure_ground_state_is_not_top_for_degenerate_excited_levels():
    from thermo_reach.core import GibbsContext

    ctx = GibbsContext.from_energies([0.0, 1.0])
    assert majorizes([0.0, 1.0], [1.0, 0.0], ctx)
    assert not majorizes([1.0, 0.0], [0.0, 1.0], ctx)


@settings(max_examples=60, deadline=None)
@given(instances(max_d=4))
def test_majorization_matches_stochastic_map_oracle(inst):
    p, ctx = inst
    rng = rng_for(int(p[0] * 1e9))
    q = rng.dirichlet(np.ones(ctx.dim))
    assert majorizes(p, q, ctx) == gibbs_preserving_map_exists(p, q, ctx.gibbs)


@settings(max_examples=60, deadline=None)
@given(instances())
def test_partial_swaps_are_majorized(inst):
    p, ctx = inst
    q = p
    rng = rng_for(ctx.dim, int(p[-1] * 1e9))
    for _ in range(4):
        j, k = rng.choice(ctx.dim, 2, replace=False) + 1
        q = apply(partial_swap(int(j), int(k), float(rng.uniform()), ctx), q)
    assert majorizes(p, q, ctx)


@given(instances())
def test_tight_majorization_is_reflexive(inst):
    p, ctx = inst
    assert tightly_majorizes(p, p, ctx)
