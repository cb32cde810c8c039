"""Deterministic simulator and analytics for tiered staking rewards."""

from .mechanism import (
    Committee,
    Population,
    SlotOutcome,
    Staker,
    TierScheme,
    assign_tiers,
    distribute_decay,
    distribute_prorata,
    distribute_tiered,
    filter_eligible,
    select_committee,
    validate_scheme,
)
from .analytics import (
    PlacementDistribution,
    SybilScenario,
    expected_reward_curve,
    expected_slot_reward,
    log_binomial,
    selection_probability,
    sybil_expected_reward,
    tier_placement_probability,
)
from .metrics import (
    DistributionStats,
    Verdict,
    distribution_stats,
    gini,
    iq_delta,
    judge,
    log_histogram,
    top_share_fraction,
)
from .simulation import (
    TABLE1_DESIGN_POINTS,
    BaseConfig,
    DesignPoint,
    PopulationSpec,
    RunResult,
    derive_slot_reward,
    generate_population,
    horizon_params,
    run_design_sweep,
    run_simulation,
)
from .config import ExperimentConfig, load_config, save_config

__version__ = "0.1.0"
