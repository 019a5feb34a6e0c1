"""
Temporary identity allocation and refresh
"""
from dataclasses import replace
import logging

import numpy as np

from .types import UeIdentity

logger = logging.getLogger(__name__)

TEMP_ID_BITS = 32
IMSI_MIN = 10 ** 14
IMSI_MAX = 10 ** 15  # exclusive; 15 digits


def draw_imsi(rng: np.random.Generator) -> int:
    return int(rng.integers(IMSI_MIN, IMSI_MAX))


def draw_temporal_id(rng: np.random.Generator) -> int:
    """Uniform 32-bit unsigned value"""
    return int(rng.integers(0, 1 << TEMP_ID_BITS))


def regenerate_temporal_ids(identity: UeIdentity, rng: np.random.Generator) -> UeIdentity:
    """
    Draw new temporal CN and RAN ids; the IMSI is left untouched

    The CN id is drawn first, then the RAN id, both from the same stream.

    Args:
        identity: Current identity of the SIM
        rng: Named random stream owned by this SIM

    Returns:
        New UeIdentity with fresh temporal ids
    """
    cn_id = draw_temporal_id(rng)
    ran_id = draw_temporal_id(rng)
    logger.debug(f"[Identity] imsi=...{identity.imsi % 10000:04d} temporal ids -> cn={cn_id} ran={ran_id}")
    return replace(identity, temporal_cn_id=cn_id, temporal_ran_id=ran_id)
