"""Counter-based uniform stream (SplitMix64) keyed by (seed, trial, car).

The compiled kernel implements the same arithmetic on uint64; any change
here must be mirrored in _kernel.pyx.
"""

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
INV_2_53 = 1.0 / (1 << 53)


def mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def stream_key(seed: int, trial: int, car: int) -> int:
    k = mix64((seed + GOLDEN) & MASK64)
    k = mix64((k + (trial + 1) * GOLDEN) & MASK64)
    return mix64((k + car * GOLDEN) & MASK64)


def uniform(key: int, t: int) -> float:
    """The t-th draw (t >= 0) of the stream, in [0, 1) with 53-bit resolution."""
    return (mix64((key + (t + 1) * GOLDEN) & MASK64) >> 11) * INV_2_53
