"""
Named random number substreams.

Each concern (arrivals, vehicle kinds, V2V loss, exploration, network init, replay sampling, scenario events) draws
from its own ``numpy.random.Generator``. All of them derive from one 64-bit seed, so a run is reproducible from its
seed while switching one feature on or off never shifts the draws of another.

Example:
    >>> streams = RngStreams(7)
    >>> streams.get("demand").random() == RngStreams(7).get("demand").random()
    True
"""

import zlib
from typing import Dict

import numpy as np

STREAM_NAMES = ("demand", "kind", "comms", "exploration", "net_init", "replay", "events")


class RngStreams:
    """
    Lazily creates one generator per name from a base seed.

    Args:
        seed: base seed, any non-negative integer below 2**64.
    """

    def __init__(self, seed: int):
        if seed < 0 or seed >= 2**64:
            raise ValueError(f"seed must be in [0, 2**64), got {seed}")
        self.seed = int(seed)
        self._generators: Dict[str, np.random.Generator] = {}

    def get(self, name: str) -> np.random.Generator:
        if name not in self._generators:
            # crc32 keeps the spawn key stable across interpreter runs, unlike hash()
            key = zlib.crc32(name.encode("utf-8"))
            sequence = np.random.SeedSequence(self.seed, spawn_key=(key,))
            self._generators[name] = np.random.default_rng(sequence)
        return self._generators[name]

    def derive(self, offset: int) -> "RngStreams":
        """Streams for repeat ``offset`` of the same config (seed, seed+1, ...)."""
        return RngStreams((self.seed + offset) % 2**64)
