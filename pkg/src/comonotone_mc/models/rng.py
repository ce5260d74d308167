"""Counter-based random substreams keyed by (seed, stream_id)."""

from dataclasses import dataclass
from typing import List

import numpy as np

from ..errors import DomainError

_SEED_BITS = 64


@dataclass(frozen=True)
class RngStream:
    """
    One reproducible substream of a master seed.

    The generator is Philox keyed by the seed and advanced by `stream_id` blocks of 2^128 draws, so
    distinct ids never overlap and a given (seed, stream_id) yields the same sequence no matter which
    worker builds it or in what order.
    """
    seed: int
    stream_id: int

    def __post_init__(self):
        if not (0 <= self.seed < 2 ** _SEED_BITS):
            raise DomainError(f"seed must be a 64-bit non-negative integer, got {self.seed}")
        if self.stream_id < 0:
            raise DomainError(f"stream_id must be non-negative, got {self.stream_id}")

    def generator(self) -> np.random.Generator:
        bit_generator = np.random.Philox(key=self.seed).jumped(self.stream_id)
        return np.random.Generator(bit_generator)


def stream_range(seed: int, start: int, stop: int) -> List[RngStream]:
    return [RngStream(seed, i) for i in range(start, stop)]


def standard_normals(streams: List[RngStream], size: int) -> np.ndarray:
    """Row i holds the first `size` standard normals of stream i."""
    out = np.empty((len(streams), size))
    for i, stream in enumerate(streams):
        out[i] = stream.generator().standard_normal(size)
    return out
