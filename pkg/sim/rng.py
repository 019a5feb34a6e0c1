"""
Named random streams keyed by (device, sim, purpose)
"""
from typing import Dict, Tuple
import logging
import zlib

import numpy as np

logger = logging.getLogger(__name__)

GLOBAL = -1


class RngStreams:
    """
    One numpy Generator per (device, sim, purpose)

    Each stream is spawned from the run seed with a fixed spawn key, so draws
    on one stream never shift the draws of another.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._streams: Dict[Tuple[int, int, str], np.random.Generator] = {}

    def stream(self, device: int, sim: int, purpose: str) -> np.random.Generator:
        key = (device, sim, purpose)
        rng = self._streams.get(key)
        if rng is None:
            seq = np.random.SeedSequence(
                entropy=self.seed,
                spawn_key=(device + 1, sim + 1, zlib.crc32(purpose.encode('utf-8'))),
            )
            rng = np.random.Generator(np.random.PCG64(seq))
            self._streams[key] = rng
        return rng
