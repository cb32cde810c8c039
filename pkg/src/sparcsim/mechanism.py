"""One slot of the tiered staking-reward mechanism, plus its alternatives.

The mechanism per slot: filter stakers by a minimum stake, draw a fixed-size
committee uniformly at random without replacement, rank the committee by
stake (descending, ties broken by ascending staker id), cut the ranking into
fixed tiers, and pay every member of a tier the same share of the slot
reward. Two alternative distributors are provided: the standard pro-rata
payout over the whole population, and a rank-based inverse power decay.

All functions here are pure: randomness enters only through an explicitly
passed generator, so disjoint RNG streams can run in parallel safely.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    InsufficientEligible,
    InvalidExponent,
    SchemeMismatch,
    ZeroTotalStake,
)

BUDGET_RTOL = 1e-9  # relative tolerance on the 100% reward budget


@dataclass(frozen=True)
class Staker:
    """A staking participant: unique ordinal id plus staked token amount."""

    id: int
    stake: float

    def __post_init__(self):
        if not np.isfinite(self.stake) or self.stake < 0:
            raise ValueError(f"stake must be finite and >= 0, got {self.stake}")


@dataclass
class Population:
    """The full staker set with the minimum-stake threshold attached."""

    stakers: list
    min_stake: float = 1.0

    def __post_init__(self):
        ids = [s.id for s in self.stakers]
        if len(ids) != len(set(ids)):
            raise ValueError("staker ids must be unique within a population")

    def __len__(self):
        return len(self.stakers)

    def stakes_array(self) -> np.ndarray:
        return np.array([s.stake for s in self.stakers], dtype=float)

    def ids_array(self) -> np.ndarray:
        return np.array([s.id for s in self.stakers], dtype=np.int64)

    def total_stake(self) -> float:
        return float(self.stakes_array().sum())

    @classmethod
    def from_stakes(cls, stakes, min_stake: float = 1.0) -> "Population":
        return cls([Staker(i, float(s)) for i, s in enumerate(stakes)], min_stake)


@dataclass
class SchemeValidation:
    """Structured verdict from validate_scheme; rejections name the rule."""

    ok: bool
    violations: list = field(default_factory=list)


@dataclass(frozen=True)
class TierScheme:
    """Committee size, per-tier member counts, and per-member reward shares.

    `member_pcts[j]` is the percentage of the total slot reward paid to each
    member of tier j, so a valid scheme satisfies
    sum(tier_sizes[j] * member_pcts[j]) == 100.
    """

    committee_size: int
    tier_sizes: tuple
    member_pcts: tuple

    def __post_init__(self):
        object.__setattr__(self, "tier_sizes", tuple(int(m) for m in self.tier_sizes))
        object.__setattr__(self, "member_pcts", tuple(float(p) for p in self.member_pcts))

    @property
    def tier_count(self) -> int:
        return len(self.tier_sizes)

    def tier_starts(self) -> list:
        """0-based committee position where each tier begins."""
        starts, acc = [], 0
        for m in self.tier_sizes:
            starts.append(acc)
            acc += m
        return starts

    def rank_pcts(self) -> np.ndarray:
        """Per-member reward percentage by committee rank position (len x)."""
        return np.repeat(np.asarray(self.member_pcts, dtype=float), self.tier_sizes)

    def require_valid(self):
        verdict = validate_scheme(self)
        if not verdict.ok:
            raise SchemeMismatch("; ".join(verdict.violations))


def validate_scheme(scheme: TierScheme) -> SchemeValidation:
    """Check every structural invariant of a tier scheme.

    Returns a verdict rather than raising, so config loading can surface all
    violations at once.
    """
    v = []
    if scheme.tier_count < 1:
        v.append("scheme must define at least one tier")
    if len(scheme.member_pcts) != scheme.tier_count:
        v.append(
            f"tier_sizes and member_pcts lengths differ "
            f"({scheme.tier_count} vs {len(scheme.member_pcts)})"
        )
    if any(m < 1 for m in scheme.tier_sizes):
        v.append("every tier size must be a positive integer")
    if any(p <= 0 for p in scheme.member_pcts):
        v.append("every per-member percentage must be positive")
    if v:
        return SchemeValidation(False, v)
    if sum(scheme.tier_sizes) != scheme.committee_size:
        v.append(
            f"tier sizes sum to {sum(scheme.tier_sizes)}, "
            f"committee size is {scheme.committee_size}"
        )
    budget = sum(m * p for m, p in zip(scheme.tier_sizes, scheme.member_pcts))
    if abs(budget - 100.0) > 100.0 * BUDGET_RTOL:
        v.append(f"per-member percentages budget {budget} != 100")
    return SchemeValidation(not v, v)


@dataclass
class Committee:
    """Selected stakers sorted descending by stake (ties: ascending id)."""

    members: list
    slot_index: int = 0

    def __len__(self):
        return len(self.members)


@dataclass
class SlotOutcome:
    """Tier assignment and reward credit for every committee member."""

    committee: Committee
    tier_of: dict  # staker id -> 1-based tier index (empty for decay payout)
    credit_of: dict  # staker id -> token credit


def filter_eligible(pop: Population) -> list:
    """Stakers meeting the minimum stake, in population order."""
    return [s for s in pop.stakers if s.stake >= pop.min_stake]


def draw_committee(rng: np.random.Generator, eligible_count: int, x: int) -> np.ndarray:
    """Draw x distinct positions in 0..eligible_count-1, uniformly.

    Shared by the object-level path and the array-based simulation loop so
    both consume the RNG stream identically.
    """
    if eligible_count < x:
        raise InsufficientEligible(
            f"{eligible_count} eligible stakers, committee needs {x}"
        )
    return rng.choice(eligible_count, size=x, replace=False)


def committee_order(members) -> list:
    """Sort stakers descending by stake, ties broken by ascending id."""
    return sorted(members, key=lambda s: (-s.stake, s.id))


def select_committee(eligible, x: int, rng: np.random.Generator,
                     slot_index: int = 0) -> Committee:
    """Uniformly select x stakers without replacement and rank them."""
    positions = draw_committee(rng, len(eligible), x)
    members = committee_order([eligible[p] for p in positions])
    return Committee(members, slot_index)


def assign_tiers(committee: Committee, scheme: TierScheme) -> dict:
    """Map each member to its 1-based tier: top m_1 ranks to tier 1, etc."""
    if len(committee) != scheme.committee_size:
        raise SchemeMismatch(
            f"committee has {len(committee)} members, "
            f"scheme expects {scheme.committee_size}"
        )
    tiers = {}
    pos = 0
    for j, m in enumerate(scheme.tier_sizes, start=1):
        for member in committee.members[pos:pos + m]:
            tiers[member.id] = j
        pos += m
    return tiers


def distribute_tiered(committee: Committee, scheme: TierScheme,
                      r_total: float) -> SlotOutcome:
    """Credit each member its tier's per-member share of r_total."""
    scheme.require_valid()
    tiers = assign_tiers(committee, scheme)
    credits = {
        member.id: scheme.member_pcts[tiers[member.id] - 1] / 100.0 * r_total
        for member in committee.members
    }
    return SlotOutcome(committee, tiers, credits)


def distribute_prorata(pop: Population, r_total: float) -> dict:
    """Standard proportional payout over the entire population.

    Every staker is credited r_total * stake / total_stake each slot; the
    committee plays no role in this benchmark.
    """
    total = pop.total_stake()
    if total <= 0:
        raise ZeroTotalStake("pro-rata distribution needs positive total stake")
    return {s.id: r_total * s.stake / total for s in pop.stakers}


def decay_weights(n: int, p: float) -> np.ndarray:
    """Normalized inverse power weights i^(-p) for ranks 1..n."""
    if p <= 0:
        raise InvalidExponent(f"decay exponent must be > 0, got {p}")
    w = np.arange(1, n + 1, dtype=float) ** (-p)
    return w / w.sum()


def distribute_decay(committee: Committee, p: float, r_total: float) -> SlotOutcome:
    """Rank-based payout: rank i gets r_total * i^(-p) / sum_j j^(-p)."""
    weights = decay_weights(len(committee), p)
    credits = {
        member.id: float(w * r_total)
        for member, w in zip(committee.members, weights)
    }
    return SlotOutcome(committee, {}, credits)
