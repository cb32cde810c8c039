"""Closed-form probabilities and expectations for the tiered mechanism.

With S stakers ranked 1..S by stake (rank 1 = largest) and a committee of x
drawn uniformly without replacement, a selected staker of rank i lands in
tier j exactly when the number X of higher-ranked stakers also selected
falls inside tier j's band of committee positions. X is hypergeometric:

    P(X = c) = C(i-1, c) * C(S-i, x-1-c) / C(S-1, x-1)

with C(n, r) = 0 whenever r < 0 or r > n. The tier-j probability sums
P(X = c) for c in [start_j, start_j + m_j - 1], where start_j is the number
of committee positions in higher tiers. Everything is evaluated in
log-space double precision; an exact big-integer path and a brute-force
committee enumeration oracle are kept alongside for verification.
"""

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from math import comb, exp, lgamma

import numpy as np

from .errors import (
    DomainError,
    InadmissibleSplit,
    InvalidCounts,
    RankOutOfRange,
)
from .mechanism import Population, TierScheme
from .rng import make_rng


def log_binomial(n: int, r: int) -> float:
    """ln C(n, r) via log-gamma; exact to ~1e-12 relative up to n ~ 1e6."""
    if r < 0 or r > n or n < 0:
        raise DomainError(f"C({n}, {r}) outside domain")
    return lgamma(n + 1) - lgamma(r + 1) - lgamma(n - r + 1)


def selection_probability(pop_size: int, x: int) -> float:
    """Probability any given staker is on the committee: x / S."""
    if x < 1 or x > pop_size:
        raise InvalidCounts(f"need 1 <= x <= S, got x={x}, S={pop_size}")
    return x / pop_size


@dataclass
class PlacementDistribution:
    """Conditional tier probabilities for one staker rank."""

    rank: int
    probs: list  # P(tier j | selected), 1-based tiers in list order
    p_selected: float


def _check_rank(pop_size: int, rank: int, x: int):
    if not 1 <= rank <= pop_size:
        raise RankOutOfRange(f"rank {rank} outside 1..{pop_size}")
    if x > pop_size:
        raise InvalidCounts(f"committee size {x} exceeds population {pop_size}")


def _hyper_term(i: int, S: int, x: int, c: int) -> float:
    """P(X = c) for the placement hypergeometric, zero-clamped."""
    if c < 0 or c > i - 1 or x - 1 - c < 0 or x - 1 - c > S - i:
        return 0.0
    return exp(
        log_binomial(i - 1, c)
        + log_binomial(S - i, x - 1 - c)
        - log_binomial(S - 1, x - 1)
    )


def tier_placement_probability(pop_size: int, rank: int,
                               scheme: TierScheme) -> PlacementDistribution:
    """Closed-form P(tier j | selected) for every tier of the scheme."""
    x = scheme.committee_size
    _check_rank(pop_size, rank, x)
    probs = []
    for start, m in zip(scheme.tier_starts(), scheme.tier_sizes):
        probs.append(sum(_hyper_term(rank, pop_size, x, c)
                         for c in range(start, start + m)))
    return PlacementDistribution(rank, probs, selection_probability(pop_size, x))


def tier_placement_exact(pop_size: int, rank: int, scheme: TierScheme) -> list:
    """Same formula in exact rational arithmetic (verification path)."""
    x = scheme.committee_size
    _check_rank(pop_size, rank, x)
    denom = comb(pop_size - 1, x - 1)
    probs = []
    for start, m in zip(scheme.tier_starts(), scheme.tier_sizes):
        num = sum(
            comb(rank - 1, c) * comb(pop_size - rank, x - 1 - c)
            for c in range(start, start + m)
            if 0 <= c <= rank - 1 and 0 <= x - 1 - c <= pop_size - rank
        )
        probs.append(Fraction(num, denom))
    return probs


def enumerate_placement(pop_size: int, rank: int, scheme: TierScheme) -> list:
    """Brute-force oracle: enumerate every committee containing the staker.

    Walks all C(S-1, x-1) choices of the other members and tallies which
    tier the staker lands in. Exact rationals; only viable for small S.
    """
    x = scheme.committee_size
    _check_rank(pop_size, rank, x)
    others = [r for r in range(1, pop_size + 1) if r != rank]
    starts = scheme.tier_starts()
    counts = [0] * scheme.tier_count
    total = 0
    for combo in combinations(others, x - 1):
        higher = sum(1 for r in combo if r < rank)
        for j in range(scheme.tier_count - 1, -1, -1):
            if higher >= starts[j]:
                counts[j] += 1
                break
        total += 1
    return [Fraction(c, total) for c in counts]


def expected_slot_reward(pop_size: int, rank: int, scheme: TierScheme,
                         r_total: float, conditional: bool = False) -> float:
    """Expected reward of one staker for one slot.

    By default the expectation is unconditional (multiplied by the x/S
    selection probability), which is what accrues per slot in simulation;
    `conditional=True` gives the expectation given selection.
    """
    dist = tier_placement_probability(pop_size, rank, scheme)
    given_selected = sum(
        p * pct / 100.0 * r_total for p, pct in zip(dist.probs, scheme.member_pcts)
    )
    return given_selected if conditional else dist.p_selected * given_selected


def expected_reward_curve(pop_size: int, scheme: TierScheme, r_total: float,
                          conditional: bool = False) -> np.ndarray:
    """Expected slot reward for every rank 1..S."""
    return np.array([
        expected_slot_reward(pop_size, i, scheme, r_total, conditional)
        for i in range(1, pop_size + 1)
    ])


def nonmonotone_ranks(curve: np.ndarray, rtol: float = 1e-12) -> list:
    """Ranks i where rank i+1 (lower stake) earns strictly more than rank i.

    Such reversals are gaming risks: a staker could profit by shedding
    stake. Returns 1-based ranks where the reversal starts.
    """
    scale = float(np.max(np.abs(curve))) or 1.0
    return [
        i + 1
        for i in range(len(curve) - 1)
        if curve[i + 1] > curve[i] + rtol * scale
    ]


def enumerate_expected_reward(pop_size: int, rank: int, scheme: TierScheme,
                              r_total: float, conditional: bool = False) -> Fraction:
    """Brute-force expected reward matching enumerate_placement's model."""
    probs = enumerate_placement(pop_size, rank, scheme)
    given_selected = sum(
        p * Fraction(pct).limit_denominator(10**9) * Fraction(r_total) / 100
        for p, pct in zip(probs, scheme.member_pcts)
    )
    if conditional:
        return given_selected
    return Fraction(scheme.committee_size, pop_size) * given_selected


# ---------------------------------------------------------------------------
# Sybil splitting
# ---------------------------------------------------------------------------

@dataclass
class SybilScenario:
    """An entity weighing one validator of stake S against m of stake S/m."""

    base_population: Population
    entity_stake: float
    split_count: int


def _insert_rank(base_stakes, stake: float) -> int:
    """Rank of a newly inserted validator among existing stakes.

    Existing stakers with equal stake outrank the newcomer (they hold the
    lower ids under the ascending-id tie-break).
    """
    return sum(1 for s in base_stakes if s >= stake) + 1


def sybil_expected_reward(scenario: SybilScenario, scheme: TierScheme,
                          r_total: float) -> tuple:
    """(single, split) expected per-slot rewards for the Sybil comparison.

    `single` inserts one validator with the full entity stake into the base
    population (size S_base + 1); `split` inserts m validators of stake/m
    (size S_base + m) and sums their expectations. Splitting changes the
    validator count, so probabilities are recomputed on each modified
    population. Sybil behavior is rational iff split > single.
    """
    m = scenario.split_count
    if m < 1:
        raise InvalidCounts(f"split count must be >= 1, got {m}")
    each = scenario.entity_stake / m
    if each < scenario.base_population.min_stake:
        raise InadmissibleSplit(
            f"per-instance stake {each} below minimum "
            f"{scenario.base_population.min_stake}"
        )
    base_stakes = scenario.base_population.stakes_array()
    n_base = len(base_stakes)

    single_rank = _insert_rank(base_stakes, scenario.entity_stake)
    single = expected_slot_reward(n_base + 1, single_rank, scheme, r_total)

    first = _insert_rank(base_stakes, each)
    split = sum(
        expected_slot_reward(n_base + m, first + k, scheme, r_total)
        for k in range(m)
    )
    return single, split


# ---------------------------------------------------------------------------
# Monte Carlo placement frequencies
# ---------------------------------------------------------------------------

def empirical_placement(pop_size: int, scheme: TierScheme, ranks, slots: int,
                        seed: int, chunk: int = 20000) -> dict:
    """Simulate committee draws and tally conditional tier frequencies.

    Returns {rank: (tier_counts ndarray, times_selected)}. Committees are
    drawn in vectorized chunks by taking the x smallest random keys per
    slot, which is uniform over x-subsets.
    """
    x = scheme.committee_size
    starts = np.array(scheme.tier_starts())
    rng = make_rng(seed)
    out = {r: [np.zeros(scheme.tier_count, dtype=np.int64), 0] for r in ranks}
    done = 0
    while done < slots:
        n = min(chunk, slots - done)
        keys = rng.random((n, pop_size))
        committees = np.argpartition(keys, x - 1, axis=1)[:, :x] + 1  # ranks
        for r in ranks:
            hit = (committees == r).any(axis=1)
            if not hit.any():
                continue
            higher = (committees[hit] < r).sum(axis=1)
            tiers = np.searchsorted(starts, higher, side="right") - 1
            out[r][0] += np.bincount(tiers, minlength=scheme.tier_count)
            out[r][1] += int(hit.sum())
        done += n
    return {r: (c, n_sel) for r, (c, n_sel) in out.items()}
