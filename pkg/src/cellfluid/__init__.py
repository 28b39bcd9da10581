"""Buffer-fill distributions at mobile base stations.

Analytic chain: cell dwell times -> channel holding time -> channel
occupancy equilibrium -> on-off fluid buffer-fill distribution, with
Monte Carlo oracles and a discrete-time cellular simulator for
cross-validation.
"""

from .dwell import (
    DwellDistribution,
    ExponentialDwell,
    HandoffDwell,
    NewCallDwell,
    exponential_dwell,
    handoff_dwell,
    new_call_dwell,
    survival_transform,
    th_cdf,
    tn_cdf,
)
from .equilibrium import ChannelEquilibrium, blocking, equilibrium, tail_at_least
from .errors import ModelError, QuadratureError, ScenarioError
from .fluid import (
    FluidModel,
    FluidSolution,
    MixtureSolution,
    WeightedSolution,
    build_matrices,
    mobile_joint,
    solve_buffer,
    solve_eigen,
    stationary_fixed,
    stationary_mobile,
    survivor,
)
from .holding import (
    HoldingTimeSolution,
    fit_mu_H,
    fth_cdf,
    fth_pdf,
    fthh_cdf,
    fthn_cdf,
    solve_fixed_point,
)
from .oracle import (
    OracleEstimate,
    simulate_birth_death,
    simulate_fluid_fixed,
    simulate_fluid_mobile,
)
from .params import (
    DerivedRates,
    ScenarioParams,
    ValidationReport,
    derive,
    read_scenario,
    scenario_params,
    validate,
)
from .sim import (
    BaseGrid,
    MobileHost,
    SimConfig,
    SimStats,
    empirical_equilibrium,
    empirical_holding,
    nearest_base,
    quality_ok,
    run,
    sim_config,
)

__version__ = "0.1.0"
