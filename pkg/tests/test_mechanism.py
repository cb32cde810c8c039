import numpy as np
import pytest

from sparcsim.errors import (
    InsufficientEligible,
    InvalidExponent,
    SchemeMismatch,
    ZeroTotalStake,
)
from sparcsim.mechanism import (
    Committee,
    Population,
    Staker,
    TierScheme,
    assign_tiers,
    committee_order,
    decay_weights,
    distribute_decay,
    distribute_prorata,
    distribute_tiered,
    draw_committee,
    filter_eligible,
    select_committee,
    validate_scheme,
)
from sparcsim.rng import make_rng
from sparcsim.simulation import TABLE1_DESIGN_POINTS


def pop_from(stakes, min_stake=1.0):
    return Population.from_stakes(stakes, min_stake)


class TestEligibility:
    def test_all_above_threshold(self):
        pop = pop_from([100, 400, 500], min_stake=50)
        assert [s.stake for s in filter_eligible(pop)] == [100, 400, 500]

    def test_below_threshold_excluded(self):
        assert filter_eligible(pop_from([10], min_stake=50)) == []

    def test_boundary_is_inclusive(self):
        assert len(filter_eligible(pop_from([50], min_stake=50))) == 1


class TestCommitteeSelection:
    def test_same_seed_same_committee(self):
        eligible = pop_from(range(1, 101)).stakers
        a = select_committee(eligible, 10, make_rng(7))
        b = select_committee(eligible, 10, make_rng(7))
        assert [s.id for s in a.members] == [s.id for s in b.members]

    def test_no_choice_when_exact_fit(self):
        eligible = pop_from([5, 9, 2]).stakers
        com = select_committee(eligible, 3, make_rng(123))
        assert sorted(s.id for s in com.members) == [0, 1, 2]

    def test_insufficient_eligible(self):
        eligible = pop_from([5, 9, 2]).stakers
        with pytest.raises(InsufficientEligible):
            select_committee(eligible, 20, make_rng(0))

    def test_sorted_descending_with_id_tiebreak(self):
        eligible = [Staker(3, 10.0), Staker(1, 10.0), Staker(2, 50.0)]
        com = select_committee(eligible, 3, make_rng(0))
        assert [s.id for s in com.members] == [2, 1, 3]

    def test_marginal_selection_frequency_uniform(self):
        # 100k slots, S=100, x=10: every staker near 0.10 within 4 SE
        slots, n, x = 100_000, 100, 10
        rng = make_rng(2024)
        counts = np.zeros(n, dtype=np.int64)
        for _ in range(slots):
            counts[draw_committee(rng, n, x)] += 1
        p = x / n
        se = np.sqrt(p * (1 - p) / slots)
        freq = counts / slots
        assert np.all(np.abs(freq - p) < 4 * se)


class TestTierAssignment:
    def test_golden_slot1(self, golden_scheme, golden_slot1_population):
        com = Committee(committee_order(golden_slot1_population.stakers))
        tiers = assign_tiers(com, golden_scheme)
        # C(500) tier 1, B(400) tier 2, A(100) tier 3
        assert tiers == {2: 1, 1: 2, 0: 3}

    def test_single_tier(self):
        com = Committee(committee_order(pop_from([4, 8, 1, 9]).stakers))
        tiers = assign_tiers(com, TierScheme(4, (4,), (25,)))
        assert set(tiers.values()) == {1}

    def test_equal_stakes_lower_id_wins_higher_tier(self):
        com = Committee(committee_order([Staker(5, 7.0), Staker(2, 7.0)]))
        tiers = assign_tiers(com, TierScheme(2, (1, 1), (60, 40)))
        assert tiers[2] == 1 and tiers[5] == 2

    def test_all_equal_stakes_total_and_deterministic(self):
        members = [Staker(i, 3.0) for i in range(6)]
        com = Committee(committee_order(members))
        tiers = assign_tiers(com, TierScheme(6, (2, 2, 2), (30, 15, 5)))
        assert tiers == {0: 1, 1: 1, 2: 2, 3: 2, 4: 3, 5: 3}

    def test_size_mismatch(self, golden_scheme):
        com = Committee(committee_order(pop_from([1, 2]).stakers))
        with pytest.raises(SchemeMismatch):
            assign_tiers(com, golden_scheme)


class TestTieredDistribution:
    def test_golden_slot1_credits(self, golden_scheme, golden_slot1_population):
        com = Committee(committee_order(golden_slot1_population.stakers))
        out = distribute_tiered(com, golden_scheme, 10.0)
        assert out.credit_of == {2: 5.0, 1: 3.0, 0: 2.0}

    def test_golden_slot2_credits(self, golden_scheme):
        # A(100), D(50), E(10) -> 5, 3, 2
        members = [Staker(0, 100.0), Staker(3, 50.0), Staker(4, 10.0)]
        out = distribute_tiered(Committee(committee_order(members)), golden_scheme, 10.0)
        assert out.credit_of == {0: 5.0, 3: 3.0, 4: 2.0}

    def test_flat_twenty_way_split(self):
        scheme = TierScheme(20, (20,), (5,))
        members = committee_order(pop_from(range(1, 21)).stakers)
        out = distribute_tiered(Committee(members), scheme, 7.0)
        assert all(c == pytest.approx(7.0 / 20) for c in out.credit_of.values())

    def test_equal_tier_equal_credit_and_conservation(self):
        rng = make_rng(5)
        for _ in range(200):
            x = int(rng.integers(2, 9))
            cut = int(rng.integers(1, x))
            sizes = (cut, x - cut)
            pcts = (60.0 / cut, 40.0 / (x - cut))
            scheme = TierScheme(x, sizes, pcts)
            members = committee_order(
                pop_from(rng.pareto(1.2, x) + 1).stakers
            )
            r = float(rng.uniform(0.1, 100))
            out = distribute_tiered(Committee(members), scheme, r)
            assert sum(out.credit_of.values()) == pytest.approx(r, rel=1e-9)


class TestProrata:
    def test_proportionality(self):
        credits = distribute_prorata(pop_from([100, 300]), 4.0)
        assert credits == {0: 1.0, 1: 3.0}

    def test_single_staker_gets_all(self):
        assert distribute_prorata(pop_from([77]), 2.5) == {0: 2.5}

    def test_three_way(self):
        credits = distribute_prorata(pop_from([100, 100, 200]), 10.0)
        assert credits == {0: 2.5, 1: 2.5, 2: 5.0}

    def test_zero_total_stake(self):
        with pytest.raises(ZeroTotalStake):
            distribute_prorata(pop_from([0.0, 0.0]), 1.0)


class TestDecay:
    def test_single_member_gets_everything(self):
        out = distribute_decay(Committee([Staker(0, 5.0)]), 2.7, 9.0)
        assert out.credit_of == {0: 9.0}

    def test_two_members_p1(self):
        members = committee_order([Staker(0, 9.0), Staker(1, 4.0)])
        out = distribute_decay(Committee(members), 1.0, 3.0)
        assert out.credit_of[0] == pytest.approx(2.0)
        assert out.credit_of[1] == pytest.approx(1.0)

    def test_n20_p15_conserves_and_decreases(self):
        members = committee_order(pop_from(np.arange(20, 0, -1) * 10.0).stakers)
        out = distribute_decay(Committee(members), 1.5, 5.0)
        credits = [out.credit_of[m.id] for m in members]
        assert sum(credits) == pytest.approx(5.0, rel=1e-9)
        assert all(a > b for a, b in zip(credits, credits[1:]))

    def test_monotone_for_random_exponents(self):
        rng = make_rng(11)
        for _ in range(50):
            n = int(rng.integers(2, 40))
            p = float(rng.uniform(0.01, 5.0))
            w = decay_weights(n, p)
            assert np.all(np.diff(w) < 0)
            assert w.sum() == pytest.approx(1.0)

    def test_bad_exponent(self):
        with pytest.raises(InvalidExponent):
            decay_weights(5, 0.0)


class TestSchemeValidation:
    def test_table1_row9_valid(self):
        verdict = validate_scheme(TierScheme(20, (10, 4, 3, 2, 1), (7, 4, 3, 2, 1)))
        assert verdict.ok and not verdict.violations

    def test_budget_violation_named(self):
        verdict = validate_scheme(TierScheme(20, (10, 10), (6, 5)))
        assert not verdict.ok
        assert any("budget" in v for v in verdict.violations)

    def test_fractional_pcts_valid(self):
        assert validate_scheme(TierScheme(20, (12, 8), (6, 3.5))).ok

    def test_size_sum_violation_named(self):
        verdict = validate_scheme(TierScheme(20, (9, 9), (6, 5)))
        assert not verdict.ok
        assert any("committee size" in v for v in verdict.violations)

    def test_all_table1_schemes_valid(self):
        for dp in TABLE1_DESIGN_POINTS:
            if dp.kind == "tiered":
                assert validate_scheme(dp.scheme).ok, dp.label()
