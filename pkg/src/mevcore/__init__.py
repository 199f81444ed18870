"""Core allocations and searcher competition in MEV block building."""

from .bundles import (
    BundleMatrix,
    OpportunityAssignment,
    ValidatorFloor,
    block_value,
    capacity_block_value,
    capacity_floor_diagnostic,
    capacity_searcher_optimal,
    top_k_runner_up_floor,
    searcher_optimal_bundle_allocation,
    second_highest,
    to_general_game,
    validator_floor,
)
from .game_core import (
    Allocation,
    CandidateBlock,
    ExplicitGame,
    GameTooLarge,
    NotSubmodularError,
    check_marginal_sum_bound,
    coalition_value,
    core_membership_bruteforce,
    core_membership_characterization,
    marginal_contribution,
    searcher_optimal_allocation,
    validate_game,
    validator_optimal_allocation,
)
from .empirics import (
    BackrunRecord,
    RegressionResult,
    group_median_profit,
    histogram_counts,
    ols_log_median,
    parse_backrun_csv,
    synthesize_backruns,
)
from .mechanisms import (
    Misreport,
    PaymentOutcome,
    construct_misreport,
    gsp_bundle_auction,
    misreport_is_profitable,
    optimal_block,
    payments_for_allocation,
    vcg_floor,
    vcg_payments,
)
from .stochastic import (
    SimConfig,
    SimReport,
    calibrate_p,
    exact_event_probabilities,
    run_trials,
    sample_matrix,
    solve_phi,
    threshold_sweep,
)

__version__ = "0.1.0"
