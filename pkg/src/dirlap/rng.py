"""Seeded random streams.

A stream is identified by ``(seed, stream_id)``. Both are fed to
:class:`numpy.random.SeedSequence` (``seed`` as entropy, ``stream_id`` as the
spawn key), so distinct identifiers give statistically independent PCG64
generators and identical identifiers give bit-identical sequences.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

_U64 = 2**64
_U32 = 2**32


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream_id: int = 0

    def __post_init__(self) -> None:
        for name in ("seed", "stream_id"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or not 0 <= int(v) < _U64:
                raise ValueError(f"{name} must be an unsigned 64-bit integer, got {v!r}")

    def generator(self, *sub: int) -> np.random.Generator:
        """PCG64 generator for this stream, or for its sub-stream ``sub``."""
        key = (int(self.stream_id),) + tuple(int(k) for k in sub)
        ss = np.random.SeedSequence(int(self.seed), spawn_key=key)
        return np.random.Generator(np.random.PCG64(ss))


RngLike = Union[RngStream, np.random.Generator, int]


def as_generator(rng: RngLike) -> np.random.Generator:
    """Return a generator; a stream or an int seed starts a fresh one."""
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, (int, np.integer)):
        return RngStream(int(rng)).generator()
    raise TypeError(f"cannot build a generator from {type(rng).__name__}")


def seed_fanout(master_seed: int, cell_index: int, rep_index: int) -> RngStream:
    """Stream for replicate ``rep_index`` of grid cell ``cell_index``.

    The stream id packs the cell index in the high 32 bits and the replicate
    index in the low 32 bits, so the map is injective for indices < 2**32.
    """
    if not 0 <= cell_index < _U32 or not 0 <= rep_index < _U32:
        raise ValueError("cell and replicate indices must lie in [0, 2**32)")
    return RngStream(int(master_seed), (int(cell_index) << 32) | int(rep_index))
