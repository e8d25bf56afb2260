"""Counter-based random streams indexed by (seed, stream index).

Every restart or Monte Carlo shard owns one stream, so results are the same
whether work runs serially or across processes.
"""

import numpy as np

_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def stream(seed: int, index: int) -> np.random.Generator:
    """Philox generator keyed by a 64-bit hash of ``(seed, index)``."""
    key = splitmix64(splitmix64(seed & _MASK64) ^ (index & _MASK64))
    return np.random.Generator(np.random.Philox(key=key))
