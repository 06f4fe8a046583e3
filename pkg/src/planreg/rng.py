"""Counter-based random streams.

Every random draw in the package goes through a ``numpy.random.Generator``
backed by the Philox-4x64 counter-based bit generator. The 128-bit Philox key
is ``(seed << 64) | stream_id``, so a ``(seed, stream_id)`` pair names one
fixed sequence regardless of process, platform or worker count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        """A fresh generator positioned at the start of this stream."""
        key = ((self.seed & _MASK64) << 64) | (self.stream_id & _MASK64)
        return np.random.Generator(np.random.Philox(key=key))

    def substream(self, *path: int) -> RngStream:
        """Derive an independent stream labelled by ``path``.

        The child id is a SeedSequence hash of ``(stream_id, *path)``, so
        sibling streams never overlap and derivation is order-free.
        """
        entropy = [self.stream_id & _MASK64, *(int(p) & _MASK64 for p in path)]
        child = np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0]
        return RngStream(self.seed, int(child))


def as_generator(rng: RngStream | np.random.Generator | int) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngStream):
        return rng.generator()
    return RngStream(int(rng)).generator()
