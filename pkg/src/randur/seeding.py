"""Deterministic, splittable random streams.

Every stochastic unit of work (one Monte Carlo run, one chunk of the bound
search) owns a generator derived purely from ``(master_seed, stream, index)``
via numpy's ``SeedSequence`` spawn keys.  Work can therefore be split across
any number of workers without changing a single draw.
"""
import numpy as np

STREAM_H0 = 0
STREAM_H1 = 1
STREAM_TYPE_SEARCH = 2
STREAM_BOOTSTRAP = 3
STREAM_CALIBRATION = 4
STREAM_SWEEP = 5


def seed_sequence(master_seed: int, stream: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(stream), int(index)))


def generator(master_seed: int, stream: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed_sequence(master_seed, stream, index)))


def derived_seed(master_seed: int, stream: int, index: int) -> int:
    """A 63-bit integer seed for a sub-experiment (e.g. one sigma of a sweep)."""
    return int(seed_sequence(master_seed, stream, index).generate_state(2, np.uint64)[0] >> np.uint64(1))
