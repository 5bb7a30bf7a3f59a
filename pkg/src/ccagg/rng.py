"""Deterministic random streams shared by the reference engine and the jitted kernel.

Both sides draw from the same splitmix64 sequence so that a (config, seed)
pair fixes every simulation output bit-for-bit, whichever engine runs it.
The pure-Python and the numba implementations are pinned to each other by a
stream-equality test.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit, uint64

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_INV_2_53 = 1.0 / 9007199254740992.0  # 2**-53


def splitmix64(state: int) -> tuple[int, int]:
    """Advance a splitmix64 state, returning (new_state, 64-bit output)."""
    state = (state + _GOLDEN) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return state, z ^ (z >> 31)


class Stream:
    """A seeded splitmix64 stream with uniform and exponential draws."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        if not 0 <= seed < 1 << 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        self.state = seed

    def next_u64(self) -> int:
        self.state, z = splitmix64(self.state)
        return z

    def next_double(self) -> float:
        # 53-bit mantissa draw in [0, 1)
        return (self.next_u64() >> 11) * _INV_2_53

    def next_exp(self, rate: float) -> float:
        # inverse-transform; 1 - u > 0 since u < 1
        return -math.log(1.0 - self.next_double()) / rate


@njit(cache=True)
def kernel_next_u64(st):
    """splitmix64 step on a one-element uint64 state array (jitted twin of Stream)."""
    st[0] = st[0] + uint64(_GOLDEN)
    z = st[0]
    z = (z ^ (z >> uint64(30))) * uint64(_MIX1)
    z = (z ^ (z >> uint64(27))) * uint64(_MIX2)
    return z ^ (z >> uint64(31))


@njit(cache=True)
def kernel_next_double(st):
    return (kernel_next_u64(st) >> uint64(11)) * _INV_2_53


def make_kernel_state(seed: int) -> np.ndarray:
    st = np.zeros(1, dtype=np.uint64)
    st[0] = np.uint64(seed)
    return st
