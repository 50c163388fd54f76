"""Multiplicative-weights dynamics on population games, with stability analysis."""

from .analysis import (
    ClassificationReport,
    EssVerdict,
    classify,
    ess_certificate_sample,
    g_factor,
    is_fixed_point,
    is_nash,
    kantorovich_bound,
    lyapunov_first_difference,
    relative_entropy,
)
from .dynamics import (
    Constant,
    EssOracle,
    LineSearch,
    PerPopulation,
    Trajectory,
    ess_oracle_rate,
    hedge_step,
    line_search_rate,
    per_population_rates,
    replicator_step,
    replicator_vector_field,
    run_trajectory,
)
from .games import (
    CongestionNetwork,
    GameField,
    LinkCost,
    PopulationStructure,
    State,
    average_payoff,
    congestion_game,
    linear_population_game,
    linear_symmetric_game,
    load_game,
    make_game,
    make_simplotope,
    normalize_game,
    parallel_links_game,
    standard_qp_game,
)
from .routing import (
    FlowProfile,
    ParallelLinkSystem,
    alpha_bar,
    beckmann_potential,
    classify_partial_support,
    deflated_k,
    delta_epsilon,
    find_periodic_orbits,
    hedge_scalar_map,
    invades,
    invasion_barrier,
    is_incrementally_deployable,
    jacobian_full_support,
    mixed_cost,
    spectral_radius,
    wardrop_parallel_affine,
)

__version__ = "0.1.0"
