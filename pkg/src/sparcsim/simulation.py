"""Experiment harness: population generation, the slot loop, and sweeps.

A run plays out `slot_count` consecutive slots over one population. Slot
rewards compound into stake immediately, so tier ranking in later slots
sees earlier earnings. The pro-rata benchmark (design point 0) credits the
whole population proportionally each slot instead of drawing a committee.

Committee selection is uniform over eligible stakers and independent of
the evolving stakes; since stakes only grow, eligibility is fixed after
the first slot, and the hot loop works on flat arrays for speed. The
array path draws from the RNG exactly like the object-level mechanism
functions, so both produce identical outcomes for identical seeds.
"""

from dataclasses import dataclass, replace

import numpy as np

from . import mechanism
from .errors import InfeasibleSpec, InsufficientEligible, SchemaError, ZeroTotalStake
from .mechanism import Population, TierScheme, decay_weights, draw_committee
from .rng import make_rng, population_seed, simulation_seed

SECONDS_PER_DAY = 86_400
DAYS_PER_YEAR = 365

COMPRESSED_HORIZON_DAYS = 3  # desk-scale mode: fewer slots, scaled-up reward


@dataclass(frozen=True)
class BaseConfig:
    """Protocol constants shared by every design point."""

    committee_size: int = 20
    population_size: int = 1000
    total_supply: float = 21_000_000.0
    staked_fraction: float = 0.60
    annual_issuance_rate: float = 0.05
    slot_seconds: int = 12
    horizon_days: int = 30
    min_stake: float = 1.0

    @property
    def total_staked(self) -> float:
        return self.total_supply * self.staked_fraction

    @property
    def slots_per_year(self) -> int:
        return DAYS_PER_YEAR * SECONDS_PER_DAY // self.slot_seconds

    @property
    def slots_per_day(self) -> int:
        return SECONDS_PER_DAY // self.slot_seconds

    @property
    def slot_count(self) -> int:
        return self.horizon_days * self.slots_per_day


def derive_slot_reward(cfg: BaseConfig) -> float:
    """Per-slot reward from the issuance chain.

    annualized issuance = total staked * issuance rate, spread evenly over
    the year's slots.
    """
    return cfg.total_staked * cfg.annual_issuance_rate / cfg.slots_per_year


def horizon_params(cfg: BaseConfig, mode: str) -> tuple:
    """(slot_count, r_total) for a horizon mode.

    "paper" runs the full configured horizon at the derived slot reward.
    "compressed" shortens the horizon to 3 days and scales the slot reward
    up by the compression factor, preserving total issuance per run.
    """
    base_reward = derive_slot_reward(cfg)
    if mode == "paper":
        return cfg.slot_count, base_reward
    if mode == "compressed":
        short = replace(cfg, horizon_days=COMPRESSED_HORIZON_DAYS)
        scale = cfg.horizon_days / COMPRESSED_HORIZON_DAYS
        return short.slot_count, base_reward * scale
    raise SchemaError(f"unknown horizon mode {mode!r} (expected paper|compressed)")


# ---------------------------------------------------------------------------
# Design points
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DesignPoint:
    """One experiment parameterization: a distributor plus an optional
    expected verdict used for sweep pass/fail accounting."""

    id: int
    kind: str  # "tiered" | "prorata" | "decay"
    scheme: TierScheme = None
    decay_p: float = None
    expected_success: bool = None

    def label(self) -> str:
        if self.kind == "prorata":
            return f"dp{self.id}:prorata"
        if self.kind == "decay":
            return f"dp{self.id}:decay(p={self.decay_p})"
        return f"dp{self.id}:tiers{self.scheme.tier_sizes}"


def _tiered(dp_id, sizes, pcts, expected, x=20):
    return DesignPoint(dp_id, "tiered", TierScheme(x, tuple(sizes), tuple(pcts)),
                       expected_success=expected)


# The ten built-in tiered design points plus the pro-rata benchmark (id 0).
TABLE1_DESIGN_POINTS = [
    DesignPoint(0, "prorata", expected_success=False),
    _tiered(1, [20], [5], False),
    _tiered(2, [10, 10], [6, 4], False),
    _tiered(3, [12, 8], [6, 3.5], False),
    _tiered(4, [7, 7, 6], [9, 4, 1.5], False),
    _tiered(5, [13, 6, 1], [6, 3.5, 1], True),
    _tiered(6, [10, 7, 3], [8.3, 2, 1], False),
    _tiered(7, [10, 6, 3, 1], [7, 4, 1, 3], True),
    _tiered(8, [5, 5, 5, 5], [10, 5, 3, 2], False),
    _tiered(9, [10, 4, 3, 2, 1], [7, 4, 3, 2, 1], True),
    _tiered(10, [6, 8, 3, 2, 1], [7, 5, 4, 2, 2], True),
]


# ---------------------------------------------------------------------------
# Population generation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PopulationSpec:
    """How to draw an initial stake distribution.

    Families:
      * "pareto":   heavy-tailed draws (pareto(alpha) + 1), rescaled;
      * "bimodal":  mixture of two lognormal components, rescaled;
      * "explicit": the given stakes verbatim, no rescaling.
    """

    family: str = "pareto"
    alpha: float = 1.16
    lognormal_mu: tuple = (0.0, 2.0)
    lognormal_sigma: tuple = (0.5, 0.5)
    mix_weight: float = 0.5
    stakes: tuple = None

    def __post_init__(self):
        if self.family not in ("pareto", "bimodal", "explicit"):
            raise SchemaError(f"unknown population family {self.family!r}")
        if self.family == "explicit" and not self.stakes:
            raise SchemaError("explicit population spec needs a stakes list")
        object.__setattr__(self, "lognormal_mu", tuple(float(v) for v in self.lognormal_mu))
        object.__setattr__(self, "lognormal_sigma", tuple(float(v) for v in self.lognormal_sigma))
        if self.stakes is not None:
            object.__setattr__(self, "stakes", tuple(float(s) for s in self.stakes))


def _rescale_with_floor(raw: np.ndarray, total: float, floor: float) -> np.ndarray:
    """Scale draws to the target total while keeping every stake >= floor."""
    stakes = raw * (total / raw.sum())
    for _ in range(100):
        low = stakes < floor
        if not low.any():
            break
        stakes[low] = floor
        free = ~low
        remaining = total - floor * low.sum()
        free_sum = stakes[free].sum()
        if not free.any() or free_sum <= 0 or remaining <= 0:
            stakes[:] = total / stakes.size
            break
        stakes[free] *= remaining / free_sum
    return stakes


def generate_population(spec: PopulationSpec, cfg: BaseConfig,
                        rng: np.random.Generator) -> Population:
    """Draw an initial population satisfying the spec's constraints."""
    if spec.family == "explicit":
        return Population.from_stakes(spec.stakes, cfg.min_stake)

    n, total = cfg.population_size, cfg.total_staked
    if cfg.min_stake * n > total:
        raise InfeasibleSpec(
            f"min stake {cfg.min_stake} x {n} stakers exceeds total staked {total}"
        )
    if spec.family == "pareto":
        raw = rng.pareto(spec.alpha, n) + 1.0
    else:  # bimodal
        pick = rng.random(n) < spec.mix_weight
        comp_a = rng.lognormal(spec.lognormal_mu[0], spec.lognormal_sigma[0], n)
        comp_b = rng.lognormal(spec.lognormal_mu[1], spec.lognormal_sigma[1], n)
        raw = np.where(pick, comp_a, comp_b)
    raw = np.maximum(raw, cfg.min_stake)
    stakes = _rescale_with_floor(raw, total, cfg.min_stake)
    return Population.from_stakes(stakes, cfg.min_stake)


# ---------------------------------------------------------------------------
# Runs
# ---------------------------------------------------------------------------

@dataclass
class RunResult:
    """Everything needed to reproduce and report one run."""

    design_point_id: int
    run_index: int
    seed: int
    slot_count: int
    r_total: float
    staker_ids: np.ndarray
    initial_stakes: np.ndarray
    final_stakes: np.ndarray
    population_seed: int = None

    def total_issued(self) -> float:
        return float(self.final_stakes.sum() - self.initial_stakes.sum())


def _committee_credits(dp: DesignPoint, cfg: BaseConfig, r_total: float) -> np.ndarray:
    """Per-committee-rank credit vector for one slot."""
    if dp.kind == "tiered":
        dp.scheme.require_valid()
        return dp.scheme.rank_pcts() / 100.0 * r_total
    if dp.kind == "decay":
        return decay_weights(cfg.committee_size, dp.decay_p) * r_total
    raise SchemaError(f"no committee credits for kind {dp.kind!r}")


def run_simulation(pop: Population, dp: DesignPoint, cfg: BaseConfig, seed: int,
                   slot_count: int = None, r_total: float = None,
                   run_index: int = 0) -> RunResult:
    """Play out one seeded run and return the initial/final snapshots."""
    if slot_count is None:
        slot_count = cfg.slot_count
    if r_total is None:
        r_total = derive_slot_reward(cfg)
    ids = pop.ids_array()
    stakes = pop.stakes_array()
    initial = stakes.copy()
    rng = make_rng(seed)

    if dp.kind == "prorata":
        for _ in range(slot_count):
            total = stakes.sum()
            if total <= 0:
                raise ZeroTotalStake("pro-rata slot with zero total stake")
            stakes += r_total / total * stakes
    else:
        x = dp.scheme.committee_size if dp.kind == "tiered" else cfg.committee_size
        eligible = np.flatnonzero(stakes >= pop.min_stake)
        if eligible.size < x:
            raise InsufficientEligible(
                f"{eligible.size} eligible stakers, committee needs {x}"
            )
        credits = _committee_credits(dp, cfg, r_total)
        for _ in range(slot_count):
            positions = draw_committee(rng, eligible.size, x)
            sel = eligible[positions]
            order = np.lexsort((ids[sel], -stakes[sel]))
            stakes[sel[order]] += credits

    return RunResult(
        design_point_id=dp.id,
        run_index=run_index,
        seed=seed,
        slot_count=slot_count,
        r_total=r_total,
        staker_ids=ids,
        initial_stakes=initial,
        final_stakes=stakes,
    )


def run_slotwise_reference(pop: Population, dp: DesignPoint, cfg: BaseConfig,
                           seed: int, slot_count: int, r_total: float) -> np.ndarray:
    """Object-level slot loop using the mechanism functions one call at a
    time. Slow; exists to cross-check the array fast path."""
    stakers = {s.id: s.stake for s in pop.stakers}
    order = [s.id for s in pop.stakers]
    rng = make_rng(seed)
    for slot in range(slot_count):
        current = Population(
            [mechanism.Staker(i, stakers[i]) for i in order], pop.min_stake
        )
        if dp.kind == "prorata":
            credits = mechanism.distribute_prorata(current, r_total)
        else:
            eligible = mechanism.filter_eligible(current)
            x = dp.scheme.committee_size if dp.kind == "tiered" else cfg.committee_size
            committee = mechanism.select_committee(eligible, x, rng, slot)
            if dp.kind == "tiered":
                outcome = mechanism.distribute_tiered(committee, dp.scheme, r_total)
            else:
                outcome = mechanism.distribute_decay(committee, dp.decay_p, r_total)
            credits = outcome.credit_of
        for sid, c in credits.items():
            stakers[sid] += c
    return np.array([stakers[i] for i in order])


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

def _run_one(args):
    dp, run_idx, pspec, cfg, master_seed, slot_count, r_total = args
    pseed = population_seed(master_seed, run_idx)
    pop = generate_population(pspec, cfg, make_rng(pseed))
    sseed = simulation_seed(master_seed, dp.id, run_idx)
    result = run_simulation(pop, dp, cfg, sseed, slot_count, r_total, run_idx)
    result.population_seed = pseed
    return result


def run_design_sweep(points, pspec: PopulationSpec, cfg: BaseConfig,
                     runs_per_point: int, master_seed: int,
                     slot_count: int = None, r_total: float = None,
                     workers: int = 1, progress=None) -> list:
    """Repeated seeded runs for every design point.

    Each run index gets a fresh randomized initial population shared across
    design points (see rng.population_seed), so benchmark comparisons pair
    like with like. Output order is (design point id, run index) regardless
    of worker scheduling.
    """
    if runs_per_point < 1:
        raise SchemaError("runs_per_point must be >= 1")
    tasks = [
        (dp, j, pspec, cfg, master_seed, slot_count, r_total)
        for dp in points
        for j in range(runs_per_point)
    ]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = []
            for res in pool.map(_run_one, tasks):
                results.append(res)
                if progress:
                    progress(res)
    else:
        results = []
        for t in tasks:
            res = _run_one(t)
            results.append(res)
            if progress:
                progress(res)
    results.sort(key=lambda r: (r.design_point_id, r.run_index))
    return results
