"""Reproducible random number streams for serial and parallel Monte Carlo.

Streams are keyed by a ``(seed, stream_id)`` pair.  The pair is hashed
through :class:`numpy.random.SeedSequence` into a Philox counter-based
generator, so distinct pairs give statistically independent streams while
identical pairs replay bit-for-bit identical sequences.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

__all__ = ["RngStream"]

_MASK64 = (1 << 64) - 1


def _mix64(a: int, b: int) -> int:
    """SplitMix64-style combiner: maps (stream_id, index) to a fresh id."""
    z = (a * 0x9E3779B97F4A7C15 + b + 1) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


@dataclass(eq=False)
class RngStream:
    """A named, reproducible random stream.

    The underlying generator is created lazily and consumed statefully:
    replaying the same call sequence on a fresh ``RngStream`` with the same
    ``(seed, stream_id)`` reproduces every draw exactly.  A single stream
    must not be shared across concurrent callers; derive substreams instead.
    """

    seed: int
    stream_id: int = 0
    _gen: np.random.Generator | None = field(default=None, repr=False)

    def __post_init__(self):
        if not (0 <= int(self.seed) <= _MASK64):
            raise DomainError("seed must fit in 64 unsigned bits")
        if not (0 <= int(self.stream_id) <= _MASK64):
            raise DomainError("stream_id must fit in 64 unsigned bits")
        self.seed = int(self.seed)
        self.stream_id = int(self.stream_id)

    @property
    def gen(self) -> np.random.Generator:
        """The live numpy generator backing this stream."""
        if self._gen is None:
            ss = np.random.SeedSequence(
                entropy=self.seed, spawn_key=(self.stream_id,)
            )
            self._gen = np.random.Generator(np.random.Philox(ss))
        return self._gen

    def substream(self, index: int) -> "RngStream":
        """Derive the ``index``-th child stream, independent of this one."""
        if index < 0:
            raise DomainError("substream index must be nonnegative")
        return RngStream(self.seed, _mix64(self.stream_id, index))

    def substreams(self, n: int) -> list["RngStream"]:
        return [self.substream(i) for i in range(n)]
