"""Reachable-state polytopes for thermal and elementary thermal operations."""

from .catalysis import (
    CatalystSpec,
    CatalyticTransition,
    Trajectory,
    ceto_slice,
    ceto_sweep,
    decompose_transition,
    optimal_catalyst_ground_min,
    track,
)
from .channels import SwapStep, apply_series, apply_step, partial_swap, standard_formation
from .core import GibbsContext, Hamiltonian, beta_order, population
from .majorization import curve, majorizes, tightly_majorizes
from .monotones import free_energy_alpha, mutual_information, nonequilibrium_free_energy, renyi_divergence
from .polytope import PointSet, extremal_filter, hull_membership, slice_vertices
from .reach import (
    ReachableSet,
    contains,
    eto_extremal_hull,
    eto_extremal_prune,
    eto_monotonic,
    eto_qutrit,
    lmax_bound,
    reachable_set,
    to_extremal_points,
)

__version__ = "0.1.0"
