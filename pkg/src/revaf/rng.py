"""Counter-based random streams for reproducible path sampling.

Every path owns an independent stream keyed by (master seed, path index),
so a batch can be generated in any order, split across workers, or
regenerated one path at a time without changing a single draw.
"""

import math

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_STREAM_SALT = 0x632BE59BD9B4E019
# exact 2**-53, written as a ratio so both lanes share the same constant
U53 = 1.0 / 9007199254740992.0


def mix64(z):
    """Bijective 64-bit finalizer (splitmix64 output function)."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return (z ^ (z >> 31)) & MASK64


def stream_state(master, index):
    """Initial stream state for path `index` under `master`."""
    if index < 0:
        raise ValueError("path index must be >= 0")
    return mix64(mix64(master & MASK64) ^ ((index * GOLDEN + _STREAM_SALT) & MASK64))


def derive_master(master, tag):
    """Stable sub-seed for a named purpose (e.g. one seed per property)."""
    h = 0
    for ch in tag.encode("utf-8"):
        h = mix64(h ^ ch)
    return mix64((master & MASK64) ^ h)


class PathStream:
    """splitmix64 stream; the compiled kernels continue it bit-for-bit."""

    __slots__ = ("state",)

    def __init__(self, master, index):
        self.state = stream_state(master, index)

    def next_u64(self):
        self.state = (self.state + GOLDEN) & MASK64
        return mix64(self.state)

    def uniform(self):
        """Uniform double in [0, 1) built from the top 53 bits."""
        return (self.next_u64() >> 11) * U53

    def exponential(self):
        """Standard exponential; redraws the (measure-zero) u == 0 case."""
        u = self.uniform()
        while u == 0.0:
            u = self.uniform()
        return -math.log1p(-u)


if __name__ == "__main__":
    s = PathStream(2024, 0)
    print([round(s.uniform(), 6) for _ in range(5)])
