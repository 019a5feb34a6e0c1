"""
Collision-avoidance strategies (s11-s14) and the paging-offset search
"""
from dataclasses import replace
from typing import List, Optional, Sequence
import logging

from domain.errors import NoFeasibleOffsetError
from domain.identity import draw_temporal_id
from domain.types import Generation, MsgKind, SimProfile, ue_node
from paging.collision import detect_collision_schedules
from paging.occasions import PagingSchedule, compute_occasion
from .base import CoordinationStrategy

logger = logging.getLogger(__name__)


def _collides(schedule: PagingSchedule, others: Sequence[PagingSchedule], num_rx: int) -> bool:
    return any(detect_collision_schedules(schedule, o, num_rx=num_rx).collisions for o in others)


def first_fit_shift(schedule: PagingSchedule, others: Sequence[PagingSchedule], num_rx: int = 1) -> Optional[int]:
    """Smallest multiple of the listen window that clears every other schedule, or None"""
    window = schedule.window_us
    for k in range(schedule.period_us // window):
        candidate = replace(schedule, shift_us=k * window)
        if not _collides(candidate, others, num_rx):
            return k * window
    return None


def assign_paging_offsets(schedules: Sequence[PagingSchedule], num_rx: int = 1, device_id: int = 0) -> List[int]:
    """
    Deterministic first-fit offsets for all registrations of one device

    The first schedule keeps offset 0; each following one takes the smallest
    window-multiple offset that overlaps none of the already placed schedules.

    Args:
        schedules: Unshifted schedules, one per SIM, in SIM order
        num_rx: Receivers of the device (>= 2 needs no offsets)
        device_id: Used in the error only

    Returns:
        Offset in microseconds per schedule

    Raises:
        NoFeasibleOffsetError: No offset clears the earlier schedules
    """
    if num_rx >= 2:
        return [0] * len(schedules)
    offsets: List[int] = []
    placed: List[PagingSchedule] = []
    for index, schedule in enumerate(schedules):
        shift = first_fit_shift(replace(schedule, shift_us=0), placed, num_rx)
        if shift is None:
            raise NoFeasibleOffsetError(device_id, index)
        offsets.append(shift)
        placed.append(replace(schedule, shift_us=shift))
    return offsets


def propose_alt_id(sim: SimProfile, alt_id: int) -> SimProfile:
    sim.alt_ue_id = alt_id
    sim.alt_ue_id_confirmed = False
    return sim


def revoke_alt_id(sim: SimProfile) -> SimProfile:
    """Drop the alternative id; paging timing falls back to the temporary id"""
    sim.alt_ue_id = None
    sim.alt_ue_id_confirmed = False
    return sim


def _candidates(dev):
    """(sim, schedules of the other monitored SIMs) for each colliding 5G SIM, secondary first"""
    out = []
    for rt in reversed(dev.sims):
        if rt.network.generation is not Generation.G5 or not rt.monitored:
            continue
        others = [o.schedule for o in dev.sims if o is not rt and o.monitored]
        if _collides(rt.schedule, others, dev.device.num_rx):
            out.append((rt, others))
    return out


class NasParamChange(CoordinationStrategy):
    """
    s11 - report the collision and let the AMF pick a fitting GUTI

    When no fitting GUTI is found within the configured attempts the AMF
    assigns a paging offset instead.
    """
    strategy_id = 11

    def on_registration(self, ctx, dev):
        ue = ue_node(dev.id)
        for rt, _ in _candidates(dev):
            # the set may have changed after fixing an earlier SIM
            others = [o.schedule for o in dev.sims if o is not rt and o.monitored]
            if not _collides(rt.schedule, others, dev.device.num_rx):
                continue
            core = rt.network.core_node
            cfg = rt.network.paging
            ctx.send(MsgKind.AssistanceInfo, ue, core, dev.id, rt.index, strategy=self.strategy_id)
            rng = ctx.stream(dev.id, rt.index, 'guti_fit')
            fitted = None
            for _ in range(self.params.s11_fit_attempts):
                candidate = draw_temporal_id(rng)
                schedule = PagingSchedule(compute_occasion(candidate, cfg, rt.network.plmn_id), cfg,
                                          rt.profile.paging_shift_us)
                if not _collides(schedule, others, dev.device.num_rx):
                    fitted = candidate
                    break
            if fitted is not None:
                rt.profile.identity = replace(rt.profile.identity, temporal_cn_id=fitted)
                logger.debug(f"[S11] device={dev.id} sim={rt.index} new GUTI fits")
            else:
                shift = first_fit_shift(replace(rt.schedule, shift_us=0), others, dev.device.num_rx)
                if shift is None:
                    logger.warning(f"[S11] device={dev.id} sim={rt.index} no GUTI or offset clears the collision")
                    ctx.record('offset_infeasible', dev.id, rt.index, strategy=self.strategy_id)
                    continue
                rt.profile.paging_shift_us = shift
                logger.debug(f"[S11] device={dev.id} sim={rt.index} fallback offset {shift}us")
            ctx.send(MsgKind.GutiReassignment, core, ue, dev.id, rt.index, strategy=self.strategy_id)
            ctx.refresh_schedules(dev)
        ctx.log_po_check(dev, 'assigned')

    def on_ids_refreshed(self, ctx, dev, rt):
        self.on_registration(ctx, dev)


class AlternativeUeId(CoordinationStrategy):
    """
    s12 - propose an alternative UE id used only for paging timing

    RAN timing switches immediately; CN timing only after the core confirms.
    """
    strategy_id = 12

    def on_registration(self, ctx, dev):
        ue = ue_node(dev.id)
        proposals = []
        for rt, others in _candidates(dev):
            cfg = rt.network.paging
            rng = ctx.stream(dev.id, rt.index, 'alt_id')
            chosen = None
            for _ in range(self.params.s12_search_attempts):
                candidate = draw_temporal_id(rng)
                schedule = PagingSchedule(compute_occasion(candidate, cfg, rt.network.plmn_id), cfg,
                                          rt.profile.paging_shift_us)
                if not _collides(schedule, others, dev.device.num_rx):
                    chosen = candidate
                    break
            if chosen is None:
                logger.warning(f"[S12] device={dev.id} sim={rt.index} no collision-free alternative id found")
                continue
            propose_alt_id(rt.profile, chosen)
            request = ctx.send(MsgKind.AltUeIdRequest, ue, rt.network.core_node, dev.id, rt.index,
                               strategy=self.strategy_id)
            proposals.append((rt, chosen, request.delivered_us))
        if not proposals:
            ctx.log_po_check(dev, 'assigned')
            return
        ctx.refresh_schedules(dev)
        confirm_at = max(at for _, _, at in proposals)
        ctx.schedule(confirm_at, 'alt_id_confirm', self._confirm, ctx, dev, proposals)

    def _confirm(self, ctx, dev, proposals):
        for rt, alt_id, _ in proposals:
            if rt.profile.alt_ue_id != alt_id:
                continue
            ctx.send(MsgKind.AltUeIdConfirm, rt.network.core_node, ue_node(dev.id), dev.id, rt.index,
                     strategy=self.strategy_id)
            rt.profile.alt_ue_id_confirmed = True
        ctx.refresh_schedules(dev)
        ctx.log_po_check(dev, 'assigned')

    def on_ids_refreshed(self, ctx, dev, rt):
        revoke_alt_id(rt.profile)
        ctx.refresh_schedules(dev)
        self.on_registration(ctx, dev)


class PagingOffset(CoordinationStrategy):
    """s13 - network-assigned offsets that keep every listen window disjoint"""
    strategy_id = 13

    def on_registration(self, ctx, dev):
        monitored = [rt for rt in dev.sims if rt.monitored]
        for rt in monitored:
            rt.profile.paging_shift_us = 0
        ctx.refresh_schedules(dev)
        try:
            offsets = assign_paging_offsets([rt.schedule for rt in monitored], dev.device.num_rx, dev.id)
        except NoFeasibleOffsetError as e:
            logger.warning(f"[S13] {e}; keeping unshifted occasions")
            ctx.record('offset_infeasible', dev.id, e.sim_index, strategy=self.strategy_id)
            ctx.log_po_check(dev, 'assigned')
            return
        for rt, shift in zip(monitored, offsets):
            rt.profile.paging_shift_us = shift
            if shift:
                ctx.send(MsgKind.OffsetAssignment, rt.network.core_node, ue_node(dev.id), dev.id, rt.index,
                         strategy=self.strategy_id)
        ctx.refresh_schedules(dev)
        ctx.log_po_check(dev, 'assigned')

    def on_ids_refreshed(self, ctx, dev, rt):
        self.on_registration(ctx, dev)


class ConsecutivePos(CoordinationStrategy):
    """s14 - after a collided page, retry at the very next slot"""
    strategy_id = 14

    def retry_on_collision(self) -> bool:
        return True
