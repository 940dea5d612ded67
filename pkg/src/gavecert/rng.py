"""Counter-based SplitMix64 stream.

Value ``i`` (0-based) of the stream keyed by ``key`` is
``mix64(key + (i + 1) * 0x9E3779B97F4A7C15 mod 2**64)`` where ``mix64`` is the
SplitMix64 finaliser::

    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    z = z ^ (z >> 31)

all modulo 2**64. Uniform doubles on [-1, 1) are ``(z >> 11) * 2**-52 - 1``
and are exact, so any implementation of the recipe reproduces them bit for
bit. Because value ``i`` depends only on ``(key, i)`` the stream can be split
across workers without changing it.
"""

import numpy as np

GOLDEN = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
MASK = (1 << 64) - 1


def mix64(z):
    z &= MASK
    z = ((z ^ (z >> 30)) * MIX1) & MASK
    z = ((z ^ (z >> 27)) * MIX2) & MASK
    return z ^ (z >> 31)


def derive_seed(seed, *keys):
    """Hash a seed and a path of integer keys into a fresh 64-bit key."""
    h = mix64(int(seed) & MASK)
    for k in keys:
        h = mix64(h ^ (int(k) & MASK))
    return h


def _mix64_array(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX2)
    return z ^ (z >> np.uint64(31))


class CounterRNG:
    """Sequential reader over the stream keyed by ``seed``."""

    def __init__(self, seed):
        self.key = int(seed) & MASK
        self.counter = 0

    def raw(self, count):
        idx = np.arange(self.counter + 1, self.counter + count + 1, dtype=np.uint64)
        self.counter += count
        states = np.uint64(self.key) + np.uint64(GOLDEN) * idx
        return _mix64_array(states)

    def uniform(self, count):
        """``count`` doubles uniform on [-1, 1)."""
        z = self.raw(count) >> np.uint64(11)
        return z.astype(np.float64) * 2.0**-52 - 1.0

    def normal(self, count):
        """Standard normals by Box-Muller on consecutive pairs of raw draws."""
        pairs = (count + 1) // 2
        z = (self.raw(2 * pairs) >> np.uint64(11)).astype(np.float64)
        u1 = (z[0::2] + 1.0) * 2.0**-53  # (0, 1]
        u2 = z[1::2] * 2.0**-53
        r = np.sqrt(-2.0 * np.log(u1))
        out = np.empty(2 * pairs)
        out[0::2] = r * np.cos(2.0 * np.pi * u2)
        out[1::2] = r * np.sin(2.0 * np.pi * u2)
        return out[:count]
