import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thermo_reach.catalysis import joint_context
from thermo_reach.core import GibbsContext
from thermo_reach.monotones import (
    DEFAULT_ALPHAS,
    MonotoneReport,
    free_energy_alpha,
    marginals,
    mutual_information,
    nonequilibrium_free_energy,
    renyi_divergence,
    shannon_entropy,
)
from thermo_reach.reach import eto_extremal_hull, sample_instance

from conftest import P1, instances, rng_for


@pytest.mark.parametrize("alpha", [-1.0, 0.0, 0.5, 1.0, 2.0, 50.0])
def test_divergence_vanishes_at_equilibrium(ctx3, alpha):
    assert renyi_divergence(ctx3.gibbs, ctx3.gibbs, alpha) == pytest.approx(0.0, abs=1e-12)
    assert free_energy_alpha(ctx3.gibbs, ctx3, alpha) == pytest.approx(-ctx3.partition_log, abs=1e-12)


def test_known_divergences():
    assert renyi_divergence([1.0, 0.0], [0.5, 0.5], 1.0) == pytest.approx(math.log(2), abs=1e-15)
    assert renyi_divergence([0.7, 0.3], [0.5, 0.5], 2.0) == pytest.approx(math.log(1.16), abs=1e-14)
    assert renyi_divergence([1.0, 0.0], [0.25, 0.75], 0.0) == pytest.approx(math.log(4), abs=1e-15)


def test_alpha_near_one_rejected():
    with pytest.raises(ValueError):
        renyi_divergence([0.7, 0.3], [0.5, 0.5], 1 + 1e-12)


def test_negative_alpha_with_zero_population():
    assert renyi_divergence([1.0, 0.0], [0.5, 0.5], -0.5) == math.inf


def test_divergence_direct_sum_oracle():
    rng = rng_for(3)
    for _ in range(50):
        p, t = rng.dirichlet(np.ones(4)), rng.dirichlet(np.ones(4))
        for a in (0.3, 0.5, 2.0, 3.5, -0.7):
            ref = np.sign(a) / (a - 1) * math.log(np.sum(p**a * t ** (1 - a)))
            assert renyi_divergence(p, t, a) == pytest.approx(ref, rel=1e-12, abs=1e-14)


def test_divergence_approaches_kl_limit():
    p, t = np.array([0.2, 0.5, 0.3]), np.array([0.4, 0.4, 0.2])
    kl = float(np.sum(p * np.log(p / t)))
    assert renyi_divergence(p, t, 1.0) == pytest.approx(kl, abs=1e-15)
    assert renyi_divergence(p, t, 1 + 1e-5) == pytest.approx(kl, abs=1e-5)


def test_free_energy_identities(ctx3):
    f1 = float(P1 @ ctx3.energies + np.sum(P1 * np.log(P1)))
    assert nonequilibrium_free_energy(P1, ctx3) == pytest.approx(f1, abs=1e-15)
    assert free_energy_alpha(P1, ctx3, 1.0) == pytest.approx(f1, abs=1e-14)
    assert nonequilibrium_free_energy([1.0, 0.0, 0.0], ctx3) == 0.0
    ctx = GibbsContext.from_energies([0.3, 1.0])
    assert nonequilibrium_free_energy([1.0, 0.0], ctx) == pytest.approx(0.3)


@given(instances(), st.sampled_from([0.0, 0.5, 1.0, 2.0, 50.0]))
def test_equilibrium_is_global_minimum(inst, alpha):
    p, ctx = inst
    assert free_energy_alpha(p, ctx, alpha) >= free_energy_alpha(ctx.gibbs, ctx, alpha) - 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.integers(3, 4))
def test_free_energies_decrease_on_reachable_vertices(seed, d):
    p, ctx = sample_instance(rng_for(seed), d)
    rs = eto_extremal_hull(p, ctx)
    for a in (0.5, 1.0, 2.0):
        fp = free_energy_alpha(p, ctx, a)
        assert all(free_energy_alpha(q, ctx, a) <= fp + 1e-10 for q in rs.points)


def test_mutual_information_cases():
    assert mutual_information(np.kron([0.3, 0.7], [0.4, 0.6]), 2, 2) == pytest.approx(0.0, abs=1e-15)
    assert mutual_information([0.5, 0, 0, 0.5], 2, 2) == pytest.approx(math.log(2), abs=1e-15)
    with pytest.raises(ValueError):
        marginals(np.ones(5) / 5, 2, 3)


def test_free_energy_excess_is_mutual_information(ctx3):
    rng = rng_for(11)
    jctx = joint_context(ctx3)
    cctx = GibbsContext.from_energies([0.0, 0.0])
    for _ in range(20):
        joint = rng.dirichlet(np.ones(6))
        ps, pc = marginals(joint, 3, 2)
        excess = (
            nonequilibrium_free_energy(joint, jctx)
            - nonequilibrium_free_energy(ps, ctx3)
            - nonequilibrium_free_energy(pc, cctx)
        )
        assert excess == pytest.approx(mutual_information(joint, 3, 2), abs=1e-10)


def test_entropy_of_uniform():
    assert shannon_entropy(np.ones(4) / 4) == pytest.approx(math.log(4))


def test_report_json_round_trip(ctx3):
    r = MonotoneReport.of(P1, ctx3)
    assert r.alpha_grid == list(DEFAULT_ALPHAS)
    assert all(math.isfinite(v) for v in r.values)
    assert MonotoneReport.from_json(json.loads(json.dumps(r.to_json()))) == r
