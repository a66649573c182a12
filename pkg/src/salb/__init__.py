"""Minimax subadditive load balancing.

Set-function oracles (spanning-tree cost, facility location,
polymatroid-style interpolation), the modularization-minimization
solver with exact modular load-balancing subsolvers, certified lower
bounds, and a multi-robot routing experiment harness.
"""

from .balance import (
    LowerBoundCert,
    MminTrace,
    brute_force_salb,
    greedy,
    initial_partition,
    lower_bound,
    mmin,
    modular_approx,
    mst_lower_bound,
    salb_objective,
    smlb_lower_bound,
)
from .interp import (
    SampleCollection,
    edmonds_greedy,
    interp_eval,
    interp_oracle,
    submodular_minorization,
)
from .lp import LpProblem, LpSolution, lp_max, lp_min, solve_lp
from .metric import (
    FacilityInstance,
    Metric,
    bird_weights,
    facility_location,
    facility_oracle,
    mst,
    mst_beta_oracle,
    mst_oracle,
    validate_metric,
)
from .mlb import MlbProblem, mlb_problem, solve_mlb_exact, solve_mlb_lst
from .mrr import (
    MrrInstance,
    MrrReport,
    PipelineConfig,
    auction_path,
    generate_instance,
    insertion_extend,
    run_pipeline,
    rtc_oracles,
    shortcut_path,
)
from .setfn import (
    Decomposition,
    GroundSet,
    ModularFn,
    OracleFlags,
    Partition,
    PropertyReport,
    SetFunctionOracle,
    audit,
    audit_sampled,
    curvature,
    marginal,
    minimize_unconstrained,
    pcst_oracle,
    pseudo_curvature,
)

__version__ = "0.1.0"
