import numpy as np
import pytest
from scipy.optimize import linprog

from thermo_reach.lp import Infeasible, StandardFormLP, Unbounded, maximize, phase_one_point

from conftest import rng_for


def test_matches_highs_on_random_bounded_programs():
    rng = rng_for(42)
    for _ in range(150):
        m, n = rng.integers(2, 6), rng.integers(6, 14)
        a = np.vstack([rng.normal(size=(m, n)), np.ones(n)])  # bounded: total mass fixed
        b = a @ (rng.uniform(0, 1, n) * (rng.uniform(size=n) < 0.6))
        if not b[-1]:
            continue
        c = rng.normal(size=n)
        ref = linprog(-c, A_eq=a, b_eq=b, bounds=(0, None), method="highs")
        z, val = maximize(c, a, b)
        assert val == pytest.approx(-ref.fun, abs=1e-8)
        assert np.max(np.abs(a @ z - b)) <= 1e-9
        assert z.min() >= -1e-12


def test_cached_basis_reused_for_many_objectives():
    rng = rng_for(5)
    a = np.vstack([rng.normal(size=(3, 10)), np.ones(10)])
    b = a @ rng.uniform(0, 1, 10)
    lp = StandardFormLP(a, b)
    assert lp.feasible
    for _ in range(30):
        c = rng.normal(size=10)
        ref = linprog(-c, A_eq=a, b_eq=b, bounds=(0, None), method="highs")
        assert lp.maximize(c)[1] == pytest.approx(-ref.fun, abs=1e-8)


def test_infeasible_and_unbounded():
    a = np.array([[1.0, 1.0]])
    lp = StandardFormLP(a, np.array([-1.0]))
    assert not lp.feasible
    with pytest.raises(Infeasible):
        lp.maximize(np.array([1.0, 0.0]))
    with pytest.raises(Unbounded):
        maximize(np.array([1.0, 0.0]), np.array([[1.0, -1.0]]), np.array([0.0]))


def test_phase_one_residual_signals_feasibility():
    a = np.array([[1.0, 2.0, 0.0], [0.0, 1.0, 1.0]])
    b = np.array([2.0, 1.0])
    z = phase_one_point(a, b)
    assert np.max(np.abs(a @ z - b)) <= 1e-12
    bad = phase_one_point(np.array([[1.0, 1.0]]), np.array([-1.0]))
    assert abs(bad.sum() + 1.0) > 0.5


def test_degenerate_program_terminates():
    # many redundant and degenerate constraints
    a = np.vstack([np.eye(4), np.eye(4), np.ones((1, 4))])
    a = np.hstack([a, np.zeros((9, 2))])
    b = np.append(np.zeros(8), 0.0)
    z, val = maximize(np.array([1, 1, 1, 1, 0, 0.0]), a, b)
    assert val == pytest.approx(0.0)


def test_highs_adapter_agrees():
    rng = rng_for(9)
    a = np.vstack([rng.normal(size=(2, 6)), np.ones(6)])
    b = a @ rng.uniform(0, 1, 6)
    c = rng.normal(size=6)
    assert maximize(c, a, b, "highs")[1] == pytest.approx(maximize(c, a, b)[1], abs=1e-9)
    with pytest.raises(ValueError):
        maximize(c, a, b, "other")
