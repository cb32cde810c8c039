import numpy as np
import pytest

from sparcsim.errors import InfeasibleSpec, InsufficientEligible, SchemaError
from sparcsim.mechanism import Population, TierScheme
from sparcsim.metrics import gini
from sparcsim.report import build_run_record, canonical_json
from sparcsim.rng import make_rng, mix_seed, population_seed, simulation_seed
from sparcsim.simulation import (
    TABLE1_DESIGN_POINTS,
    BaseConfig,
    DesignPoint,
    PopulationSpec,
    derive_slot_reward,
    generate_population,
    horizon_params,
    run_design_sweep,
    run_simulation,
    run_slotwise_reference,
)

PAPER_CFG = BaseConfig()

SMALL_CFG = BaseConfig(committee_size=5, population_size=24, min_stake=1.0)
SMALL_SCHEME = TierScheme(5, (2, 2, 1), (25, 20, 10))
SMALL_DP = DesignPoint(3, "tiered", SMALL_SCHEME)


class TestRewardDerivation:
    def test_total_staked(self):
        assert PAPER_CFG.total_staked == pytest.approx(12_600_000)

    def test_slot_reward_value(self):
        assert derive_slot_reward(PAPER_CFG) == pytest.approx(630_000 / 2_628_000)

    def test_zero_issuance(self):
        cfg = BaseConfig(annual_issuance_rate=0.0)
        assert derive_slot_reward(cfg) == 0.0

    def test_horizon_arithmetic(self):
        assert PAPER_CFG.slots_per_year == 2_628_000
        assert PAPER_CFG.slots_per_day == 7_200
        assert PAPER_CFG.slot_count == 216_000

    def test_compressed_mode_preserves_issuance(self):
        slots_paper, r_paper = horizon_params(PAPER_CFG, "paper")
        slots_comp, r_comp = horizon_params(PAPER_CFG, "compressed")
        assert slots_comp == 21_600 and r_comp == pytest.approx(10 * r_paper)
        assert slots_comp * r_comp == pytest.approx(slots_paper * r_paper)

    def test_unknown_mode(self):
        with pytest.raises(SchemaError):
            horizon_params(PAPER_CFG, "warp")


class TestPopulationGeneration:
    def test_explicit_passthrough(self):
        spec = PopulationSpec(family="explicit", stakes=(100, 400, 500))
        pop = generate_population(spec, PAPER_CFG, make_rng(0))
        assert list(pop.stakes_array()) == [100, 400, 500]

    def test_pareto_invariants_across_seeds(self):
        spec = PopulationSpec(alpha=1.16)
        for seed in range(100):
            pop = generate_population(spec, PAPER_CFG, make_rng(seed))
            stakes = pop.stakes_array()
            assert stakes.size == 1000
            assert stakes.min() >= PAPER_CFG.min_stake
            assert stakes.sum() == pytest.approx(PAPER_CFG.total_staked, rel=1e-6)
            assert stakes.max() / np.median(stakes) > 5  # heavy right tail

    def test_bimodal_invariants(self):
        spec = PopulationSpec(family="bimodal")
        pop = generate_population(spec, PAPER_CFG, make_rng(9))
        stakes = pop.stakes_array()
        assert stakes.sum() == pytest.approx(PAPER_CFG.total_staked, rel=1e-6)
        assert stakes.min() >= PAPER_CFG.min_stake

    def test_infeasible_minimum(self):
        cfg = BaseConfig(min_stake=20_000)
        with pytest.raises(InfeasibleSpec):
            generate_population(PopulationSpec(), cfg, make_rng(0))

    def test_deterministic_per_seed(self):
        spec = PopulationSpec()
        a = generate_population(spec, PAPER_CFG, make_rng(5)).stakes_array()
        b = generate_population(spec, PAPER_CFG, make_rng(5)).stakes_array()
        assert np.array_equal(a, b)


def small_population(seed=1):
    return generate_population(PopulationSpec(alpha=1.2), SMALL_CFG, make_rng(seed))


class TestRunSimulation:
    def test_zero_slots_is_identity(self):
        pop = small_population()
        res = run_simulation(pop, SMALL_DP, SMALL_CFG, 7, slot_count=0)
        assert np.array_equal(res.initial_stakes, res.final_stakes)

    def test_prorata_preserves_shares(self):
        pop = small_population()
        dp0 = DesignPoint(0, "prorata")
        res = run_simulation(pop, dp0, SMALL_CFG, 3, slot_count=2000, r_total=5.0)
        shares_before = res.initial_stakes / res.initial_stakes.sum()
        shares_after = res.final_stakes / res.final_stakes.sum()
        assert np.allclose(shares_before, shares_after, rtol=1e-9, atol=0)

    def test_token_conservation(self):
        pop = small_population()
        for dp in (SMALL_DP, DesignPoint(0, "prorata"), DesignPoint(5, "decay", decay_p=1.5)):
            res = run_simulation(pop, dp, SMALL_CFG, 11, slot_count=500, r_total=3.0)
            assert res.final_stakes.sum() == pytest.approx(
                res.initial_stakes.sum() + 500 * 3.0, rel=1e-6
            )

    def test_monotone_accrual(self):
        pop = small_population()
        res = run_simulation(pop, SMALL_DP, SMALL_CFG, 13, slot_count=300, r_total=2.0)
        assert np.all(res.final_stakes >= res.initial_stakes)

    def test_insufficient_eligible_propagates(self):
        pop = Population.from_stakes([10.0, 10.0], min_stake=1.0)
        with pytest.raises(InsufficientEligible):
            run_simulation(pop, SMALL_DP, SMALL_CFG, 1, slot_count=1)

    def test_seed_determinism(self):
        pop = small_population()
        a = run_simulation(pop, SMALL_DP, SMALL_CFG, 99, slot_count=400, r_total=1.0)
        b = run_simulation(pop, SMALL_DP, SMALL_CFG, 99, slot_count=400, r_total=1.0)
        assert np.array_equal(a.final_stakes, b.final_stakes)
        assert canonical_json(build_run_record(a, 0.05)) == canonical_json(
            build_run_record(b, 0.05)
        )

    def test_fast_path_matches_slotwise_mechanism_loop(self):
        pop = small_population(3)
        for dp in (SMALL_DP, DesignPoint(6, "decay", decay_p=1.2)):
            fast = run_simulation(pop, dp, SMALL_CFG, 21, slot_count=60, r_total=4.0)
            ref = run_slotwise_reference(pop, dp, SMALL_CFG, 21, 60, 4.0)
            assert np.array_equal(fast.final_stakes, ref)
        fast = run_simulation(pop, DesignPoint(0, "prorata"), SMALL_CFG, 21,
                              slot_count=60, r_total=4.0)
        ref = run_slotwise_reference(pop, DesignPoint(0, "prorata"), SMALL_CFG,
                                     21, 60, 4.0)
        assert np.allclose(fast.final_stakes, ref, rtol=1e-12)

    def test_design_point_nine_reduces_gini(self):
        # seeded regression at compressed scale on the full base config
        spec = PopulationSpec()
        pop = generate_population(spec, PAPER_CFG, make_rng(42))
        slots, r_total = horizon_params(PAPER_CFG, "compressed")
        res = run_simulation(pop, TABLE1_DESIGN_POINTS[9], PAPER_CFG, 4242,
                             slot_count=slots, r_total=r_total)
        assert gini(res.final_stakes) < gini(res.initial_stakes)


class TestSweep:
    POINTS = [
        DesignPoint(0, "prorata", expected_success=False),
        SMALL_DP,
        DesignPoint(6, "decay", decay_p=1.5),
    ]

    def sweep(self, workers=1):
        return run_design_sweep(
            self.POINTS, PopulationSpec(alpha=1.2), SMALL_CFG,
            runs_per_point=2, master_seed=77, slot_count=120, r_total=2.0,
            workers=workers,
        )

    def test_shape_and_order(self):
        results = self.sweep()
        assert [(r.design_point_id, r.run_index) for r in results] == [
            (0, 0), (0, 1), (3, 0), (3, 1), (6, 0), (6, 1)
        ]

    def test_population_shared_across_points_per_run_index(self):
        results = self.sweep()
        by_key = {(r.design_point_id, r.run_index): r for r in results}
        assert np.array_equal(
            by_key[(0, 0)].initial_stakes, by_key[(3, 0)].initial_stakes
        )
        assert not np.array_equal(
            by_key[(0, 0)].initial_stakes, by_key[(0, 1)].initial_stakes
        )

    def test_reproducible_end_to_end(self):
        a = self.sweep()
        b = self.sweep()
        for ra, rb in zip(a, b):
            assert canonical_json(build_run_record(ra, 0.05)) == canonical_json(
                build_run_record(rb, 0.05)
            )

    def test_workers_do_not_change_results(self):
        serial = self.sweep(workers=1)
        parallel = self.sweep(workers=2)
        for rs, rp in zip(serial, parallel):
            assert np.array_equal(rs.final_stakes, rp.final_stakes)

    def test_seed_splitting_is_documented_mix(self):
        assert population_seed(77, 1) == mix_seed(77, 1, 1)
        assert simulation_seed(77, 3, 1) == mix_seed(77, 2, 3, 1)
