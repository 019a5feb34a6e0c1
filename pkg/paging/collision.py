"""
Paging-occasion collision detection between two SIMs sharing one receiver
"""
from dataclasses import dataclass
from math import lcm
from typing import Optional
import logging

import numpy as np

from .occasions import PagingConfig, PagingOccasion, PagingSchedule

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CollisionReport:
    systematic: bool
    fraction_colliding: float
    occurrences: int  # occasions of SIM a inside one hyper-period
    collisions: int

    @classmethod
    def none(cls, occurrences: int = 0) -> 'CollisionReport':
        return cls(systematic=False, fraction_colliding=0.0, occurrences=occurrences, collisions=0)


def detect_collision_schedules(a: PagingSchedule, b: PagingSchedule,
                               window_a_us: Optional[int] = None,
                               window_b_us: Optional[int] = None,
                               num_rx: int = 1) -> CollisionReport:
    """
    Compare two periodic schedules over their hyper-period

    Both schedules are treated as infinitely periodic, so every occurrence of a
    inside one hyper-period is tested against every window of b that can reach it.
    """
    wa = window_a_us or a.window_us
    wb = window_b_us or b.window_us
    hyper = lcm(a.period_us, b.period_us)
    n_a = hyper // a.period_us
    if num_rx >= 2:
        return CollisionReport.none(n_a)

    a_times = a.base_us + np.arange(n_a, dtype=np.int64) * a.period_us

    lo = int(a_times[0]) - wb
    hi = int(a_times[-1]) + wa
    k_min = (lo - b.base_us) // b.period_us
    k_max = (hi - b.base_us) // b.period_us + 1
    b_times = b.base_us + np.arange(k_min, k_max + 1, dtype=np.int64) * b.period_us

    # last b window starting before each a window ends; equal-length windows
    # make it the one that reaches furthest
    idx = np.searchsorted(b_times, a_times + wa, side='left') - 1
    valid = idx >= 0
    hits = np.zeros(n_a, dtype=bool)
    hits[valid] = b_times[idx[valid]] + wb > a_times[valid]

    collisions = int(hits.sum())
    return CollisionReport(
        systematic=collisions == n_a,
        fraction_colliding=collisions / n_a,
        occurrences=n_a,
        collisions=collisions,
    )


def detect_collision(occ_a: PagingOccasion, cfg_a: PagingConfig,
                     occ_b: PagingOccasion, cfg_b: PagingConfig,
                     listen_window_us: Optional[int] = None,
                     num_rx: int = 1,
                     shift_a_us: int = 0, shift_b_us: int = 0) -> CollisionReport:
    """
    Detect overlap of two SIMs' paging listen windows

    Args:
        occ_a, cfg_a: Occasion and config of the first SIM
        occ_b, cfg_b: Occasion and config of the second SIM
        listen_window_us: Dwell time needed to decode a page (default: own occasion slot)
        num_rx: Receivers on the device; two receivers never collide
        shift_a_us, shift_b_us: Multi-SIM paging offsets

    Returns:
        CollisionReport; systematic when every occurrence of a collides
    """
    if listen_window_us is not None and listen_window_us <= 0:
        raise ValueError("listen_window must be > 0")
    a = PagingSchedule(occ_a, cfg_a, shift_a_us)
    b = PagingSchedule(occ_b, cfg_b, shift_b_us)
    report = detect_collision_schedules(a, b, listen_window_us, listen_window_us, num_rx)
    logger.debug(f"[Collision] pf={occ_a.pf}/po={occ_a.po} vs pf={occ_b.pf}/po={occ_b.po}: "
                 f"{report.collisions}/{report.occurrences}")
    return report
