"""fracbranch: simulation and Monte Carlo verification toolkit for
randomly time-changed branching population models.

The package samples one-sided stable subordinators and their inverses,
composes them with Galton-Watson chains, Feller branching diffusions and
Yule processes, and verifies the closed-form moments, inequalities, pmfs
and scaling limits of the resulting time-changed processes.
"""

from .csbp import (
    BranchingMechanism,
    FellerSpec,
    TcProcessSpec,
    YuleSpec,
    compose_time_change,
    compose_time_change_batch,
    csbp_mean,
    csbp_second_moment,
    psi_eval,
    simulate_feller,
    simulate_yule,
    solve_exponent,
    tc_branching_gap,
    tc_mean,
    tc_second_moment,
    yule_fractional_pmf,
)
from .errors import (
    AccuracyError,
    CensoringError,
    DomainError,
    FracbranchError,
    InputError,
    NumericalError,
    PreconditionError,
    ResourceError,
)
from .grids import GridFunction, PathGrid
from .gw import (
    GwPath,
    OffspringLaw,
    branching_inequality_experiment,
    gw_step,
    simulate_gw,
    simulate_time_changed_gw,
)
from .sampling import (
    InversePath,
    SubordinatorPath,
    WaitingTimeLaw,
    invert_path,
    sample_inverse_marginal,
    sample_one_sided_stable,
    sample_renewal_count,
    sample_subordinator_path,
)
from .scaling import ConvergenceReport, FellerLimitFamily, scaling_limit_experiment
from .special import caputo_l1, gamma_fn, mittag_leffler
from .stats import McEstimate, chi_square_gof, estimate, ks_two_sample
from .streams import RngStream

__version__ = "0.1.0"

__all__ = [
    "AccuracyError",
    "BranchingMechanism",
    "CensoringError",
    "ConvergenceReport",
    "DomainError",
    "FellerLimitFamily",
    "FellerSpec",
    "FracbranchError",
    "GridFunction",
    "GwPath",
    "InputError",
    "InversePath",
    "McEstimate",
    "NumericalError",
    "OffspringLaw",
    "PathGrid",
    "PreconditionError",
    "ResourceError",
    "RngStream",
    "SubordinatorPath",
    "TcProcessSpec",
    "WaitingTimeLaw",
    "YuleSpec",
    "branching_inequality_experiment",
    "caputo_l1",
    "chi_square_gof",
    "compose_time_change",
    "compose_time_change_batch",
    "csbp_mean",
    "csbp_second_moment",
    "estimate",
    "gamma_fn",
    "gw_step",
    "invert_path",
    "ks_two_sample",
    "mittag_leffler",
    "psi_eval",
    "sample_inverse_marginal",
    "sample_one_sided_stable",
    "sample_renewal_count",
    "sample_subordinator_path",
    "scaling_limit_experiment",
    "simulate_feller",
    "simulate_gw",
    "simulate_time_changed_gw",
    "simulate_yule",
    "solve_exponent",
    "tc_branching_gap",
    "tc_mean",
    "tc_second_moment",
    "yule_fractional_pmf",
]
