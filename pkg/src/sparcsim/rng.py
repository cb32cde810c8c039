"""Deterministic randomness for reproducible simulations.

All randomness in the package flows through numpy's PCG64 generator, which
has a published algorithm and produces identical streams on every platform
(floating-point draws are built from 53 random mantissa bits of integer
output). Seeds for individual runs are derived from a master seed with a
splitmix64 mix chain, so any single run can be reproduced in isolation.
"""

import numpy as np

MASK64 = (1 << 64) - 1

# Stream tags keep population seeds and simulation seeds from colliding.
POPULATION_STREAM = 1
SIMULATION_STREAM = 2


def _splitmix64(z: int) -> int:
    """One splitmix64 step (Steele/Lea/Flood finalizer), 64-bit wrapping."""
    z = (z + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def mix_seed(*parts: int) -> int:
    """Fold integers into a single 64-bit seed via a splitmix64 chain."""
    h = 0
    for p in parts:
        h = _splitmix64(h ^ (int(p) & MASK64))
    return h


def population_seed(master_seed: int, run_index: int) -> int:
    """Seed for generating the initial population of run `run_index`.

    Depends only on (master_seed, run_index), so every design point sees
    the same initial population for a given run index. That makes per-run
    comparisons against the pro-rata benchmark meaningful.
    """
    return mix_seed(master_seed, POPULATION_STREAM, run_index)


def simulation_seed(master_seed: int, design_point_id: int, run_index: int) -> int:
    """Seed for the slot loop of one (design point, run index) pair."""
    return mix_seed(master_seed, SIMULATION_STREAM, design_point_id, run_index)


def make_rng(seed: int) -> np.random.Generator:
    """The package-wide generator: PCG64 behind numpy's Generator API."""
    return np.random.Generator(np.random.PCG64(seed))
