import pytest

from sparcsim.mechanism import Population, Staker, TierScheme


@pytest.fixture
def golden_scheme():
    """Three tiers of one member paying 5/3/2 of a 10-token slot reward."""
    return TierScheme(3, (1, 1, 1), (50, 30, 20))


@pytest.fixture
def golden_slot1_population():
    return Population(
        [Staker(0, 100.0), Staker(1, 400.0), Staker(2, 500.0)], min_stake=50.0
    )


def uniform_budget_scheme(x, sizes):
    """Valid scheme over the given tier sizes: equal budget per tier."""
    k = len(sizes)
    return TierScheme(x, tuple(sizes), tuple(100.0 / (k * m) for m in sizes))
