"""Seeded random streams.

All shuffles and samplers use numpy's PCG64 bit generator, seeded through
``SeedSequence`` so that sub-streams keyed by integer tuples (for instance
``(seed, combination, replicate)``) are independent of iteration order.
PCG64's output sequence is fixed by numpy's stream-compatibility policy, so
splits are reproducible across runs and platforms.

Inside the tree kernel, per-node feature subsampling uses SplitMix64, which
is small enough to implement identically in C and in Python.
"""

import numpy as np

_MASK64 = (1 << 64) - 1


def stream(*key):
    """Return a PCG64 generator for the non-negative integer tuple ``key``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(k) for k in key])))


def derive_seed(*key):
    """A 63-bit integer seed derived deterministically from ``key``."""
    state = np.random.SeedSequence([int(k) for k in key]).generate_state(2, np.uint32)
    return (int(state[0]) << 31) ^ int(state[1])


class SplitMix64:
    """Vigna's SplitMix64 generator (64-bit state, period 2**64)."""

    __slots__ = ("state",)

    def __init__(self, seed):
        self.state = int(seed) & _MASK64

    def next(self):
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)


def sample_features(gen, n_features, mtry):
    """Draw ``mtry`` distinct feature indices with a partial Fisher-Yates pass.

    Returns them in ascending order so split tie-breaks stay index based.
    """
    pool = list(range(n_features))
    for i in range(mtry):
        j = i + gen.next() % (n_features - i)
        pool[i], pool[j] = pool[j], pool[i]
    return sorted(pool[:mtry])
