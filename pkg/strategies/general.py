"""
General strategies (s01-s07): page content, absences, leaving and gaps
"""
from typing import Optional
import logging

from domain.types import (
    DEFAULT_PRIORITIES, Generation, MsgKind, RanState, ServiceKind, ms_to_us, ue_node,
)
from .base import CoordinationStrategy, LeavePlan

logger = logging.getLogger(__name__)


class PagingCause(CoordinationStrategy):
    """s01 - the page (and the DDN) carries the service that triggered it"""
    strategy_id = 1

    def paging_cause(self, ctx, dev, rt, mts) -> Optional[ServiceKind]:
        if not mts:
            return None
        return max((mt.service for mt in mts), key=lambda s: DEFAULT_PRIORITIES[s])


class ShortAbsence(CoordinationStrategy):
    """s02 - brief tune-aways announced to the serving network, no RRC release"""
    strategy_id = 2

    def tune_away_mode(self, ctx, dev, rt, serving) -> Optional[str]:
        return 'absence'

    def on_short_service(self, ctx, dev, serving, rt, absence_us: int) -> bool:
        if absence_us > ms_to_us(self.params.s02_max_absence_ms):
            return False
        ctx.short_absence(dev, serving, absence_us, 'short_service', strategy=self.strategy_id)
        return True

    def on_update_blocked(self, ctx, dev, rt, serving) -> bool:
        absence_us = 2 * ctx.delays.nas_us
        back_on_target = ctx.short_absence(dev, serving, absence_us, 'location_update',
                                           strategy=self.strategy_id, target=rt)
        ctx.flush_update(dev, rt, back_on_target)
        return True


class BusyIndication(CoordinationStrategy):
    """s03 - answer a declined page with a busy reply so the core stops paging"""
    strategy_id = 3

    def on_busy_page(self, ctx, dev, rt, serving) -> bool:
        # the busy reply only exists on 5G cores
        if rt.network.generation is not Generation.G5:
            return False
        if rt.profile.is_inactive and not self.params.busy_while_inactive:
            return False
        at_us = ctx.tx_burst(dev, serving, rt, ctx.delays.nas_us, 'busy_indication', self.strategy_id)
        ctx.send(MsgKind.BusyIndication, ue_node(dev.id), rt.network.core_node, dev.id, rt.index,
                 at_us=at_us, strategy=self.strategy_id)
        return True


class LocalLeaving(CoordinationStrategy):
    """s04 - notify over AS and switch at once; the core releases the connection later"""
    strategy_id = 4

    def on_leave(self, ctx, dev, serving, target, mts) -> Optional[LeavePlan]:
        now = ctx.now
        ctx.send(MsgKind.LeavingNotice, ue_node(dev.id), serving.network.ran_node, dev.id, serving.index,
                 strategy=self.strategy_id)
        suspend = self.params.s04_suspend and serving.network.generation is Generation.G5
        return LeavePlan(
            strategy=self.strategy_id,
            latency_us=dev.device.switch_delay_us,
            release_state=RanState.INACTIVE if suspend else RanState.IDLE,
            release_at_us=now + ctx.delays.as_us + ctx.delays.nas_us,
        )


class GracefulLeaving(CoordinationStrategy):
    """
    s05 - leave with the expected absence period

    The RAN chooses INACTIVE for short absences on 5G, IDLE otherwise, and the
    paused service resumes once the device is free again.
    """
    strategy_id = 5

    def on_leave(self, ctx, dev, serving, target, mts) -> Optional[LeavePlan]:
        now = ctx.now
        expected_us = max((mt.duration_us for mt in mts), default=0)
        short = expected_us <= ms_to_us(self.params.s05_inactive_threshold_ms)
        state = RanState.INACTIVE if short and serving.network.generation is Generation.G5 else RanState.IDLE
        ctx.send(MsgKind.LeavingNotice, ue_node(dev.id), serving.network.ran_node, dev.id, serving.index,
                 strategy=self.strategy_id)
        logger.debug(f"[S05] device={dev.id} absence={expected_us}us -> {state.value}")
        return LeavePlan(
            strategy=self.strategy_id,
            latency_us=2 * ctx.delays.as_us + dev.device.switch_delay_us,
            release_state=state,
            release_at_us=now + ctx.delays.as_us,
            resume_on_return=True,
            away=True,
        )


class LeaveAndReturn(CoordinationStrategy):
    """s06 - core holds paging and buffers MT traffic for a configured interval"""
    strategy_id = 6

    def on_leave(self, ctx, dev, serving, target, mts) -> Optional[LeavePlan]:
        d = ctx.delays
        now = ctx.now
        ue, core = ue_node(dev.id), serving.network.core_node
        request = ctx.send(MsgKind.LeaveRequest, ue, core, dev.id, serving.index,
                           at_us=now + d.as_us, strategy=self.strategy_id)
        confirm = ctx.send(MsgKind.LeaveConfirm, core, ue, dev.id, serving.index,
                           at_us=request.delivered_us, strategy=self.strategy_id)
        ran_variant = self.params.s06_variant == 'ran' and serving.network.generation is Generation.G5
        return LeavePlan(
            strategy=self.strategy_id,
            latency_us=2 * d.as_us + 2 * d.nas_us + dev.device.switch_delay_us,
            release_state=RanState.INACTIVE if ran_variant else RanState.IDLE,
            release_at_us=confirm.delivered_us,
            away=True,
            hold_us=ms_to_us(self.params.s06_hold_ms),
            hold_variant='ran' if ran_variant else 'cn',
        )


class SchedulingGap(CoordinationStrategy):
    """s07 - ask the serving 5G RAN for gaps aligned to the other SIM's occasions"""
    strategy_id = 7

    def on_connected(self, ctx, dev, rt):
        if rt.network.generation is not Generation.G5 or not dev.device.shared_receiver:
            return
        if not any(o is not rt and o.monitored for o in dev.sims):
            return
        ue, ran = ue_node(dev.id), rt.network.ran_node
        request = ctx.send(MsgKind.SchedulingGapRequest, ue, ran, dev.id, rt.index, strategy=self.strategy_id)
        granted = ctx.stream(dev.id, rt.index, 'gap').random() < self.params.s07_grant_probability
        kind = MsgKind.SchedulingGapGrant if granted else MsgKind.SchedulingGapDeny
        ctx.send(kind, ran, ue, dev.id, rt.index, at_us=request.delivered_us, strategy=self.strategy_id)
        if rt.session is not None:
            rt.session.gap_granted = granted
        if not granted:
            logger.debug(f"[S07] device={dev.id} sim={rt.index} gap denied")

    def tune_away_mode(self, ctx, dev, rt, serving) -> Optional[str]:
        if serving.session is not None and serving.session.gap_granted:
            return 'gap'
        return None
