"""Numerical ergodic optimization for one-dimensional maps."""

from .dynamics import (
    MapSpec,
    birkhoff_sum,
    circle_cover,
    derivative_abs,
    doubling,
    eval_map,
    parse_map,
    preimages,
    quadratic,
    renorm_core,
    tent,
)
from .errors import *  # noqa: F401,F403
from .markov import MarkovCover, admissible_cover, invariant_set_depth, verify_markov
from .observables import Observable, eval_observable, lip_constant, observable_for, parse_observable
from .optimize import (
    BetaReport,
    beta_periodic,
    beta_report,
    gamma_estimate,
    subordination_check,
    support_candidate,
)
from .orbits import PeriodicOrbit, dist_to_orbit, enumerate_periodic_orbits, orbit_average
from .subaction import SubActionTable, lipschitz_profile, subaction_candidate, verify_subaction
from .ulam import UlamGraph, build_ulam, max_mean_cycle

__version__ = "0.1.0"
