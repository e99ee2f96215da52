"""Counter-based uniform stream (splitmix64 hashing).

A draw is a pure function of ``(seed, sample, counter)``, so sample ``i`` of a
Monte Carlo run sees the same numbers whether samples are generated serially,
in chunks, or on different workers, and the numba and numpy kernels agree
bit for bit.

Counter layout used by the walk kernels: step ``k`` consumes counter ``2k``
for the jump choice and ``2k + 1`` for the holding time.
"""
from __future__ import annotations

import numpy as np

from ._accel import njit

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_TWO53 = 2.0**-53


def _mix_np(x):
    with np.errstate(over="ignore"):
        z = x + _GAMMA
        z = (z ^ (z >> _S30)) * _M1
        z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def sample_keys(seed: int, samples) -> np.ndarray:
    """Per-sample stream keys ``mix(mix(seed) ^ i)`` as uint64."""
    s = _mix_np(np.array([seed % 2**64], dtype=np.uint64))[0]
    idx = np.asarray(samples, dtype=np.uint64)
    return _mix_np(s ^ idx)


def uniforms_np(keys, counter) -> np.ndarray:
    """Uniforms in (0, 1] for every key at one counter value."""
    h = _mix_np(np.asarray(keys, dtype=np.uint64) ^ np.uint64(counter))
    return ((h >> _S11).astype(np.float64) + 1.0) * _TWO53


@njit
def uniform_nb(key, counter):
    z = (key ^ np.uint64(counter)) + np.uint64(0x9E3779B97F4A7C15)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    z = z ^ (z >> np.uint64(31))
    return (np.float64(z >> np.uint64(11)) + 1.0) * 1.1102230246251565e-16


def uniform(seed: int, sample: int, counter: int) -> float:
    """Single draw; convenience for tests and small scripts."""
    return float(uniforms_np(sample_keys(seed, [sample]), counter)[0])
