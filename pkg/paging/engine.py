"""
CN- and RAN-originated paging with retries and scope escalation
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, FrozenSet, List, Optional, Sequence, Tuple
import logging

import config
from domain.errors import PagingFailedError, RanPagingFailedError
from domain.types import CnState, Generation, RanState, ServiceKind, SimProfile
from .occasions import PagingSchedule, ScopeLevel, compute_occasion

logger = logging.getLogger(__name__)


class MissReason(Enum):
    RX_BUSY = "RX_BUSY"                    # receiver held by a connection on another SIM
    COLLISION = "COLLISION"                # overlapping occasion of another SIM won the receiver
    DECLINED_SILENT = "DECLINED_SILENT"    # heard, user/policy chose not to answer
    ABSENT = "ABSENT"                      # device retuning to another network
    NOT_MONITORED = "NOT_MONITORED"        # SIM reachable only through a notification path
    OUT_OF_SCOPE_DEFERRED = "OUT_OF_SCOPE_DEFERRED"  # location update held back by a busy Tx
    MOVED = "MOVED"
    LINK_LOSS = "LINK_LOSS"


MULTI_SIM_REASONS = frozenset({
    MissReason.RX_BUSY, MissReason.COLLISION, MissReason.DECLINED_SILENT,
    MissReason.ABSENT, MissReason.NOT_MONITORED, MissReason.OUT_OF_SCOPE_DEFERRED,
})


class PagingStatus(Enum):
    PENDING = "PENDING"
    RESPONDED = "RESPONDED"
    BUSY = "BUSY"
    FAILED = "FAILED"
    CANCELLED = "CANCELLED"


@dataclass(frozen=True)
class PageAttempt:
    time_us: int
    level: ScopeLevel
    scope_cells: int
    attempt: int
    answered: bool
    reason: Optional[MissReason] = None
    consecutive: bool = False

    @property
    def wasted_units(self) -> int:
        """Cells paged where nobody answered"""
        return self.scope_cells - 1 if self.answered else self.scope_cells


@dataclass
class PagingOutcome:
    responded: bool = False
    busy: bool = False
    attempts_used: int = 0
    cells_paged: int = 0
    escalated: bool = False
    ran: bool = False
    cause: Optional[ServiceKind] = None
    response_time_us: Optional[int] = None
    buffer_discarded: bool = False
    absence_known: bool = False  # network was told the UE would be away
    attempts: List[PageAttempt] = field(default_factory=list)

    @property
    def failed(self) -> bool:
        return not self.responded and not self.busy

    @property
    def wasted_units(self) -> int:
        return sum(a.wasted_units for a in self.attempts)

    @property
    def misleading(self) -> bool:
        """Failure the network blames on mobility or radio while the SIM was only busy elsewhere"""
        if self.absence_known:
            return False
        return self.failed and any(a.reason in MULTI_SIM_REASONS for a in self.attempts)

    def to_dict(self) -> dict:
        return {
            'responded': self.responded,
            'busy': self.busy,
            'attempts': self.attempts_used,
            'cells_paged': self.cells_paged,
            'escalated': self.escalated,
            'ran': self.ran,
            'wasted_units': self.wasted_units,
            'misleading': self.misleading,
            'buffer_discarded': self.buffer_discarded,
            'absence_known': self.absence_known,
        }


ScopeFn = Callable[[ScopeLevel], FrozenSet[int]]


class PagingProcedure:
    """
    Attempt bookkeeping for one paging procedure

    Drives both the event-driven engine and the synchronous helpers below: the
    caller asks for the next attempt time, decides whether the UE answered and
    reports back with record().
    """

    def __init__(self, schedule: PagingSchedule, levels: Sequence[ScopeLevel], scope_fn: ScopeFn,
                 max_attempts: int, retry_interval_us: int, consecutive_retry: bool = False,
                 ran: bool = False, cause: Optional[ServiceKind] = None):
        self.schedule = schedule
        self.levels = tuple(levels)
        self.scope_fn = scope_fn
        self.max_attempts = max_attempts
        self.retry_interval_us = retry_interval_us
        self.consecutive_retry = consecutive_retry
        self.status = PagingStatus.PENDING
        self.outcome = PagingOutcome(ran=ran, cause=cause)
        self._level_index = 0
        self._attempt_at_level = 0
        self._next_is_consecutive = False

    @property
    def level(self) -> ScopeLevel:
        return self.levels[self._level_index]

    @property
    def done(self) -> bool:
        return self.status is not PagingStatus.PENDING

    @property
    def next_is_consecutive(self) -> bool:
        return self._next_is_consecutive

    def scope(self) -> FrozenSet[int]:
        return self.scope_fn(self.level)

    def first_attempt_at(self, t_us: int) -> int:
        return self.schedule.next_at_or_after(t_us)

    def record(self, t_us: int, answered: bool, reason: Optional[MissReason] = None,
               busy: bool = False) -> Optional[int]:
        """
        Register the result of the attempt sent at t_us

        Args:
            t_us: Time the page went out
            answered: UE replied (paging response or busy indication)
            reason: Why an unanswered page was missed
            busy: The reply was a busy indication

        Returns:
            Time of the next attempt, or None when the procedure is finished
        """
        if self.done:
            raise RuntimeError("paging procedure already finished")
        scope = self.scope()
        consecutive = self._next_is_consecutive
        self._attempt_at_level += 1
        self.outcome.attempts_used += 1
        self.outcome.cells_paged += len(scope)
        self.outcome.attempts.append(PageAttempt(
            time_us=t_us, level=self.level, scope_cells=len(scope),
            attempt=self._attempt_at_level, answered=answered, reason=reason,
            consecutive=consecutive,
        ))

        if answered:
            self.outcome.response_time_us = t_us
            if busy:
                self.outcome.busy = True
                self.status = PagingStatus.BUSY
            else:
                self.outcome.responded = True
                self.status = PagingStatus.RESPONDED
            return None

        self._next_is_consecutive = False
        if self._attempt_at_level >= self.max_attempts:
            if self._level_index + 1 >= len(self.levels):
                self.status = PagingStatus.FAILED
                return None
            self._level_index += 1
            self._attempt_at_level = 0
            self.outcome.escalated = True
            logger.debug(f"[Paging] escalating to {self.level.value}")
            return self.schedule.next_at_or_after(t_us + self.retry_interval_us)

        if reason is MissReason.COLLISION and self.consecutive_retry and not consecutive:
            self._next_is_consecutive = True
            return t_us + self.schedule.window_us
        return self.schedule.next_at_or_after(t_us + self.retry_interval_us)

    def cancel(self, responded: bool = True):
        """Stop paging; responded=True when the UE answered through another path"""
        if not self.done:
            self.status = PagingStatus.CANCELLED
            self.outcome.responded = responded


def paging_identity(sim: SimProfile, ran: bool = False) -> int:
    """Identity value the paging timing is derived from"""
    if sim.generation is Generation.G4:
        return sim.identity.imsi
    if ran:
        # RAN timing follows a proposed alternative id before the core confirms it
        return sim.alt_ue_id if sim.alt_ue_id is not None else sim.identity.temporal_ran_id
    if sim.alt_ue_id is not None and sim.alt_ue_id_confirmed:
        return sim.alt_ue_id
    return sim.identity.temporal_cn_id


def sim_schedule(sim: SimProfile, network, ran: bool = False) -> PagingSchedule:
    occ = compute_occasion(paging_identity(sim, ran), network.paging, network.plmn_id)
    return PagingSchedule(occ, network.paging, sim.paging_shift_us)


def cn_scope_cells(network, sim: SimProfile, level: ScopeLevel, last_cell: int) -> FrozenSet[int]:
    topo = network.topology
    if level is ScopeLevel.LAST_CELL:
        return frozenset({last_cell})
    if level is ScopeLevel.TA_LIST:
        return topo.cells_of_tas(sim.ta_list)
    if level is ScopeLevel.RNA:
        return topo.rna_cells(sim.current_ta if sim.rna_ta is None else sim.rna_ta)
    return topo.registration_area_cells(sim.ta_list, network.generation)


HearFn = Callable[[int, FrozenSet[int]], Tuple[bool, Optional[MissReason]]]


def _always_heard(t_us: int, scope: FrozenSet[int]):
    return True, None


def _drive(proc: PagingProcedure, start_us: int, can_hear: HearFn, horizon_us: Optional[int]) -> PagingOutcome:
    t = proc.first_attempt_at(start_us)
    while t is not None and (horizon_us is None or t < horizon_us):
        heard, reason = can_hear(t, proc.scope())
        t = proc.record(t, answered=heard, reason=None if heard else reason)
    if not proc.done:
        proc.status = PagingStatus.FAILED
    return proc.outcome


def run_cn_paging(network, sim: SimProfile, cause: Optional[ServiceKind] = None,
                  can_hear: Optional[HearFn] = None, start_us: int = 0,
                  last_cell: Optional[int] = None, consecutive_retry: bool = False,
                  retry_interval_us: Optional[int] = None, horizon_us: Optional[int] = None,
                  raise_on_failure: bool = False) -> PagingOutcome:
    """
    Page an IDLE SIM at its occasions, escalating the scope after max_attempts

    Args:
        network: NetworkModel that pages
        sim: Target SIM, must be CN-IDLE
        cause: Paging cause carried in the page, if any
        can_hear: Callback (time, scope cells) -> (heard, miss reason)
        start_us: Earliest time the first page may go out
        last_cell: Cell of last contact (defaults to the SIM's current cell)
        consecutive_retry: Retry at the next slot after a collided occasion
        retry_interval_us: Spacing between retries at one level
        horizon_us: Stop paging at this time
        raise_on_failure: Raise PagingFailedError instead of returning a failed outcome

    Returns:
        PagingOutcome with attempts, cells paged and escalation flag
    """
    if sim.cn_state is not CnState.IDLE:
        raise ValueError(f"CN paging needs an IDLE SIM, got {sim.cn_state.value}")
    cell = sim.current_cell if last_cell is None else last_cell
    proc = PagingProcedure(
        schedule=sim_schedule(sim, network),
        levels=network.paging.escalation_levels,
        scope_fn=lambda level: cn_scope_cells(network, sim, level, cell),
        max_attempts=network.paging.max_attempts,
        retry_interval_us=retry_interval_us if retry_interval_us is not None else config.PAGE_RETRY_INTERVAL_MS * 1000,
        consecutive_retry=consecutive_retry,
        cause=cause,
    )
    outcome = _drive(proc, start_us, can_hear or _always_heard, horizon_us)
    logger.debug(f"[Paging] CN paging sim={sim.sim_index} responded={outcome.responded} "
                 f"attempts={outcome.attempts_used} cells={outcome.cells_paged}")
    if raise_on_failure and outcome.failed:
        raise PagingFailedError(outcome)
    return outcome


def run_ran_paging(network, sim: SimProfile, can_hear: Optional[HearFn] = None, start_us: int = 0,
                   rna_ta: Optional[int] = None, retry_interval_us: Optional[int] = None,
                   horizon_us: Optional[int] = None, raise_on_failure: bool = False) -> PagingOutcome:
    """
    Page an INACTIVE SIM inside its RNA only; no escalation

    A failure marks any held downlink buffer as discarded.
    """
    if network.generation is not Generation.G5:
        raise ValueError("RAN paging exists only in 5G")
    if sim.ran_state is not RanState.INACTIVE:
        raise ValueError(f"RAN paging needs an INACTIVE SIM, got {sim.ran_state.value}")
    ta = sim.current_ta if rna_ta is None else rna_ta
    rna = network.topology.rna_cells(ta)
    proc = PagingProcedure(
        schedule=sim_schedule(sim, network, ran=True),
        levels=(ScopeLevel.RNA,),
        scope_fn=lambda level: rna,
        max_attempts=network.paging.max_attempts,
        retry_interval_us=retry_interval_us if retry_interval_us is not None else config.PAGE_RETRY_INTERVAL_MS * 1000,
        ran=True,
    )
    outcome = _drive(proc, start_us, can_hear or _always_heard, horizon_us)
    if outcome.failed:
        outcome.buffer_discarded = True
        logger.debug(f"[Paging] RAN paging failed for sim={sim.sim_index}, buffer discarded")
        if raise_on_failure:
            raise RanPagingFailedError(outcome)
    return outcome
