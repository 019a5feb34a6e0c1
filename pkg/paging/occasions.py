"""
Paging frame / paging occasion derivation and wall-time schedules
"""
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import List, Tuple
import logging

import numpy as np

import config

logger = logging.getLogger(__name__)


class ScopeLevel(Enum):
    LAST_CELL = "LAST_CELL"
    TA_LIST = "TA_LIST"
    RNA = "RNA"
    FULL_REGISTRATION_AREA = "FULL_REGISTRATION_AREA"


DEFAULT_ESCALATION = (ScopeLevel.LAST_CELL, ScopeLevel.TA_LIST, ScopeLevel.FULL_REGISTRATION_AREA)


@dataclass(frozen=True)
class PagingConfig:
    """DRX configuration of one network; all times in microseconds"""
    drx_cycle: int = 32
    occasions_per_frame: int = 4
    frame_duration_us: int = 10_000
    frame_offset_us: int = 0
    max_attempts: int = 3
    escalation_levels: Tuple[ScopeLevel, ...] = field(default=DEFAULT_ESCALATION)

    @classmethod
    def from_config(cls, **overrides) -> 'PagingConfig':
        base = cls(
            drx_cycle=config.DRX_CYCLE,
            occasions_per_frame=config.OCCASIONS_PER_FRAME,
            frame_duration_us=config.FRAME_DURATION_MS * 1000,
            max_attempts=config.MAX_PAGING_ATTEMPTS,
        )
        return replace(base, **overrides)

    @property
    def slot_us(self) -> int:
        """Spacing of occasions inside a frame; also the default listen window"""
        return self.frame_duration_us // self.occasions_per_frame

    @property
    def cycle_us(self) -> int:
        return self.drx_cycle * self.frame_duration_us

    def validate(self) -> List[str]:
        errors = []
        if self.drx_cycle < 1:
            errors.append("drx_cycle must be >= 1")
        if self.occasions_per_frame not in (1, 2, 4):
            errors.append("occasions_per_frame must be 1, 2 or 4")
        if self.frame_duration_us <= 0:
            errors.append("frame_duration must be > 0")
        elif self.frame_duration_us % max(self.occasions_per_frame, 1):
            errors.append("frame_duration must split evenly into occasions")
        if not 0 <= self.frame_offset_us < self.frame_duration_us:
            errors.append("frame_offset must lie in [0, frame_duration)")
        if self.max_attempts < 1:
            errors.append("max_attempts must be >= 1")
        if not self.escalation_levels:
            errors.append("escalation_levels must not be empty")
        return errors


@dataclass(frozen=True)
class PagingOccasion:
    pf: int
    po: int
    plmn_id: int = 0


def compute_occasion(ue_id_value: int, cfg: PagingConfig, plmn_id: int = 0) -> PagingOccasion:
    """pf = id mod T, po = floor(id / T) mod Ns"""
    pf = ue_id_value % cfg.drx_cycle
    po = (ue_id_value // cfg.drx_cycle) % cfg.occasions_per_frame
    return PagingOccasion(pf=pf, po=po, plmn_id=plmn_id)


def occasion_wall_times(occ: PagingOccasion, cfg: PagingConfig, horizon_us: int,
                        shift_us: int = 0) -> List[int]:
    """
    Expand an occasion onto the simulation clock

    Args:
        occ: Paging occasion (pf, po)
        cfg: Paging config of the network that owns the occasion
        horizon_us: Exclusive end of the expansion
        shift_us: Extra multi-SIM paging offset applied on top of the frame offset

    Returns:
        Every instant offset + (k*T + pf)*frame + po*slot (+ shift) below horizon
    """
    return PagingSchedule(occ, cfg, shift_us).times(horizon_us).tolist()


@dataclass(frozen=True)
class PagingSchedule:
    """Periodic listen windows of one SIM on one network"""
    occasion: PagingOccasion
    config: PagingConfig
    shift_us: int = 0

    @property
    def base_us(self) -> int:
        cfg = self.config
        return (cfg.frame_offset_us + self.occasion.pf * cfg.frame_duration_us
                + self.occasion.po * cfg.slot_us + self.shift_us)

    @property
    def period_us(self) -> int:
        return self.config.cycle_us

    @property
    def window_us(self) -> int:
        return self.config.slot_us

    def times(self, horizon_us: int) -> np.ndarray:
        base = self.base_us
        if horizon_us <= base:
            return np.empty(0, dtype=np.int64)
        return np.arange(base, horizon_us, self.period_us, dtype=np.int64)

    def next_at_or_after(self, t_us: int) -> int:
        base = self.base_us
        if t_us <= base:
            return base
        k = -(-(t_us - base) // self.period_us)
        return base + k * self.period_us

    def count_between(self, start_us: int, end_us: int) -> int:
        """Number of occasions starting in [start, end)"""
        if end_us <= start_us:
            return 0
        return max(0, self._index_at_or_after(end_us) - self._index_at_or_after(start_us))

    def _index_at_or_after(self, t_us: int) -> int:
        base = self.base_us
        if t_us <= base:
            return 0
        return -(-(t_us - base) // self.period_us)

    def overlaps(self, t_us: int, window_us: int) -> bool:
        """True when one of our windows intersects [t, t + window)"""
        first = self.next_at_or_after(t_us - self.window_us + 1)
        return first < t_us + window_us
