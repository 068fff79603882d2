import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thermo_reach.channels import SwapStep, apply_series, apply_step
from thermo_reach.core import DimensionError, GibbsContext, beta_order, has_slope_ties
from thermo_reach.majorization import majorizes, tightly_majorizes
from thermo_reach.polytope import extremal_filter
from thermo_reach.reach import (
    PreconditionError,
    ReachableSet,
    contains,
    default_lmax_cap,
    eto_extremal_hull,
    eto_extremal_prune,
    eto_monotonic,
    eto_qutrit,
    lmax_bound,
    qutrit_theta_xi,
    reachable_set,
    sample_instance,
    to_extremal_points,
)

from conftest import P1, P2, rng_for


def same_vertices(a, b, tol=1e-9):
    a, b = np.asarray(a), np.asarray(b)
    if len(a) != len(b):
        return False
    return all(np.min(np.max(np.abs(b - x), axis=1)) <= tol for x in a)


def test_length_bounds():
    assert [lmax_bound(d) for d in (3, 4, 5, 6, 7)] == [3, 20, 58, 238, 1259]
    assert default_lmax_cap(7) == 147
    with pytest.raises(DimensionError):
        lmax_bound(2)


def test_to_vertices_of_qubit_ground_state():
    ctx = GibbsContext.from_energies([0.0, 0.7])
    rs = to_extremal_points([1.0, 0.0], ctx)
    d12 = np.exp(-0.7)
    assert same_vertices(rs.points, [[1.0, 0.0], [1 - d12, d12]], 1e-12)


def test_to_vertices_of_named_state(ctx3):
    rs = to_extremal_points(P1, ctx3)
    assert len(rs) == 6
    orders = {beta_order(q, ctx3) for q in rs.points}
    assert len(orders) == 6
    assert all(tightly_majorizes(P1, q, ctx3) for q in rs.points)


@pytest.mark.parametrize("method", ["to", "eto-hull", "eto-prune", "eto-qutrit", "eto-mono"])
def test_equilibrium_is_fixed(ctx3, method):
    rs = reachable_set(ctx3.gibbs, ctx3, method)
    assert len(rs) == 1
    np.testing.assert_allclose(rs.points[0], ctx3.gibbs, atol=1e-12)


def test_hull_equilibrium_exhausts_immediately(ctx3):
    rs = eto_extremal_hull(ctx3.gibbs, ctx3)
    assert rs.exhausted and rs.series == [()]


def test_qutrit_families_for_named_state(ctx3):
    theta, xi = qutrit_theta_xi(P1, ctx3)
    want = [
        P1,
        apply_step(SwapStep(1, 2), P1, ctx3),
        apply_series([SwapStep(1, 2), SwapStep(2, 3)], P1, ctx3),
        apply_series([SwapStep(1, 3), SwapStep(2, 3)], P1, ctx3),
    ]
    for q in want:
        assert np.min(np.max(np.abs(theta.points - q), axis=1)) <= 1e-12
    assert len(theta) == 5 and len(xi) == 3


def test_qutrit_methods_agree(ctx3):
    for p in (P1, P2):
        hull = eto_extremal_hull(p, ctx3)
        assert same_vertices(hull.points, eto_qutrit(p, ctx3).points)
        pruned = eto_extremal_prune(p, ctx3, post_filter=True)
        assert same_vertices(hull.points, pruned.points)
        assert len(hull) <= 8


def test_named_target_outside_both_sets(ctx3):
    q = [0.2179, 0.518, 0.2641]
    assert not contains(q, eto_extremal_hull(P1, ctx3))[0]
    assert not contains(q, to_extremal_points(P1, ctx3))[0]
    assert contains(P1, eto_extremal_hull(P1, ctx3))[0]
    assert contains(ctx3.gibbs, to_extremal_points(P1, ctx3))[0]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([3, 4]))
def test_vertex_soundness(seed, d):
    p, ctx = sample_instance(rng_for(seed), d)
    rs = eto_extremal_hull(p, ctx)
    to = to_extremal_points(p, ctx)
    assert rs.exhausted
    for q, s in zip(rs.points, rs.series):
        assert majorizes(p, q, ctx)
        assert np.max(np.abs(apply_series(s, p, ctx) - q)) <= 1e-12
        assert contains(q, to)[0]
        assert len(s) <= lmax_bound(d)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([3, 4]))
def test_every_order_attained(seed, d):
    p, ctx = sample_instance(rng_for(seed), d)
    if has_slope_ties(p, ctx):
        return
    rs = eto_extremal_hull(p, ctx)
    orders = {beta_order(q, ctx) for q in rs.points}
    assert len(orders) == len(list(itertools.permutations(range(d))))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([3, 4]))
def test_neighbouring_swap_is_unique_vertex_of_its_order(seed, d):
    p, ctx = sample_instance(rng_for(seed), d)
    if has_slope_ties(p, ctx):
        return
    rs = eto_extremal_hull(p, ctx)
    order = beta_order(p, ctx)
    for i in range(d - 1):
        q = apply_step(SwapStep(order[i], order[i + 1]), p, ctx)
        oq = beta_order(q, ctx)
        same = [v for v in rs.points if beta_order(v, ctx) == oq]
        assert len(same) == 1
        assert np.max(np.abs(same[0] - q)) <= 1e-9


def _monotone_instance(rng, d, descending=False):
    ctx = GibbsContext.from_energies(np.sort(rng.uniform(0, 1, d)))
    g = np.sort(rng.uniform(0.1, 3, d))
    g = g if descending else g[::-1]
    p = g * ctx.gibbs
    return p / p.sum(), ctx


@pytest.mark.parametrize("descending", [False, True])
def test_monotone_fast_path_matches_hull(descending):
    rng = rng_for(21, descending)
    for _ in range(15):
        p, ctx = _monotone_instance(rng, 4, descending)
        mono = eto_monotonic(p, ctx)
        hull = eto_extremal_hull(p, ctx)
        assert same_vertices(extremal_filter(mono.vertices).points, hull.points)
        assert max(len(s) for s in mono.series) <= 6


def test_monotone_precondition(ctx3):
    assert eto_monotonic(P2, ctx3).method == "eto-mono"
    with pytest.raises(PreconditionError):
        eto_monotonic(P1, ctx3)


def test_prune_is_superset_of_hull():
    rng = rng_for(4)
    for _ in range(10):
        p, ctx = sample_instance(rng, 4)
        hull = eto_extremal_hull(p, ctx)
        pruned = eto_extremal_prune(p, ctx)
        assert pruned.superset
        for v in hull.points:
            assert np.min(np.max(np.abs(pruned.points - v), axis=1)) <= 1e-9
        assert same_vertices(extremal_filter(pruned.vertices).points, hull.points)


def test_cap_reported_honestly():
    p, ctx = sample_instance(rng_for(2), 4)
    full = eto_extremal_hull(p, ctx)
    assert full.exhausted
    short = eto_extremal_hull(p, ctx, lmax_cap=2)
    assert not short.exhausted and short.lmax_used == 2
    assert max(len(s) for s in short.series) <= 2


def test_deterministic_and_json_round_trip(ctx3):
    a = eto_extremal_hull(P1, ctx3)
    b = eto_extremal_hull(P1, ctx3)
    assert json.dumps(a.to_json()) == json.dumps(b.to_json())
    back = ReachableSet.from_json(json.loads(json.dumps(a.to_json())))
    assert np.array_equal(back.points, a.points) and back.series == a.series


def test_unknown_method(ctx3):
    with pytest.raises(ValueError):
        reachable_set(P1, ctx3, "nope")
    with pytest.raises(DimensionError):
        eto_qutrit([0.5, 0.5], GibbsContext.from_energies([0, 1]))
