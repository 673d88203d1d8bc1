"""
Counter-based random numbers.

A uniform is addressed by (key, counter) through the SplitMix64 finalizer,
so any trial or step can be regenerated without replaying a stream and the
values never depend on which worker draws them.
"""

import math

import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_SHIFT30 = np.uint64(30)
_SHIFT27 = np.uint64(27)
_SHIFT31 = np.uint64(31)
_SHIFT11 = np.uint64(11)
_ONE = np.uint64(1)
_TWO = np.uint64(2)
_UNIT = 1.0 / 9007199254740992.0  # 2**-53

SEED_MAX = 2**64 - 1


@njit(cache=True, nogil=True)
def mix64(z):
    z = (z ^ (z >> _SHIFT30)) * _MIX1
    z = (z ^ (z >> _SHIFT27)) * _MIX2
    return z ^ (z >> _SHIFT31)


@njit(cache=True, nogil=True)
def counter_key(key, counter):
    """The counter-th SplitMix64 output of the stream seeded by key."""
    return mix64(key + (counter + _ONE) * _GOLDEN)


@njit(cache=True, nogil=True)
def counter_uniform(key, counter):
    """Uniform double in [0, 1) addressed by (key, counter)."""
    return np.float64(counter_key(key, counter) >> _SHIFT11) * _UNIT


@njit(cache=True, nogil=True)
def counter_normal(key, counter):
    """Standard normal from the uniform pair (2 counter, 2 counter + 1)."""
    u1 = 1.0 - counter_uniform(key, _TWO * counter)
    u2 = counter_uniform(key, _TWO * counter + _ONE)
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


@njit(cache=True, nogil=True)
def derive_key(master_seed, index):
    return counter_key(mix64(master_seed), index)


def derive_seed(master_seed: int, index: int) -> int:
    """Seed of trial `index` under `master_seed`; a fixed keyed mixing."""
    if not 0 <= master_seed <= SEED_MAX:
        raise ValueError(f"master seed must be a 64-bit unsigned integer, got {master_seed}")
    return int(derive_key(np.uint64(master_seed), np.uint64(index)))
