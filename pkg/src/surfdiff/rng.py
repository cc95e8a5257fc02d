"""Deterministic counter-based random numbers.

All stochastic pieces of the package (noise models, procedural textures)
draw from the splitmix64 mixing function evaluated at explicit counters.
The same (seed, stream, index) triple yields the same value on every
platform and under any evaluation order, which keeps noisy experiments
reproducible without carrying generator state around.

Reference: Steele, Lea, Flood, "Fast splittable pseudorandom number
generators" (the finalizer constants below are the standard ones).
"""
from __future__ import annotations

import numpy as np

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def _mix(z):
    # modular 64-bit wraparound is the point of the finalizer
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
        return z ^ (z >> np.uint64(31))


def random_u64(seed, stream, index):
    """splitmix64 output for the given counters.

    Parameters
    ----------
    seed, stream : int
        Experiment seed and a small integer separating independent
        random sequences (one per noise channel, texture octave, ...).
    index : int or ndarray of uint64
        Position within the stream. Arrays are processed vectorized.
    """
    idx = np.asarray(index, dtype=np.uint64)
    seed = np.asarray(np.uint64(seed))
    stream = np.asarray(np.uint64(stream))
    with np.errstate(over="ignore"):
        base = _mix(seed * _GAMMA + _mix(stream + _GAMMA))
        return _mix(base + (idx + np.uint64(1)) * _GAMMA)


def random_uniform(seed, stream, index):
    """Uniform floats in the open interval (0, 1)."""
    bits = random_u64(seed, stream, index)
    # 53-bit mantissa, offset by half a ulp so 0 is excluded (safe for log)
    return ((bits >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def random_normal(seed, stream, index):
    """Standard normal deviates via Box-Muller on two derived streams."""
    u1 = random_uniform(seed, 2 * stream, index)
    u2 = random_uniform(seed, 2 * stream + 1, index)
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


def random_choice(seed, stream, index, n_options):
    """Integers in [0, n_options) with negligible modulo bias for small n."""
    if n_options <= 0:
        raise ValueError("n_options must be positive")
    bits = random_u64(seed, stream, index)
    return (bits % np.uint64(n_options)).astype(np.int64)
