# Licensed under the MIT license

"""
Compact pairwise SIS epidemics on networks with a given degree distribution
"""

__version__ = "0.1.0"

from .certificate import iterate_certificate, verify_bound_chain
from .degrees import build_distribution, check_assumptions, epidemic_params, tau_c
from .equilibria import disease_free, endemic_equilibrium
from .integrator import integrate, integrate_to_equilibrium
from .pool import Pool, set_start_method
from .stability import (
    bifurcation_coefficients,
    bifurcation_sweep,
    dfe_spectrum,
    sweep_on_pool,
)
from .system import FullSystem, ReducedSystem, ThetaSystem, initial_condition
from .types import (
    CPSISError,
    CPState,
    DegreeDistribution,
    EpidemicParams,
    IntegrationConfig,
)
