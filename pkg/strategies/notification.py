"""
Single Rx/Tx notification strategies (s08-s10)

The MT network reaches the device through the other SIM's connection instead
of (s09, s10) or in parallel with (s08) its own paging.
"""
import logging

from domain.errors import NotApplicableError
from domain.types import Generation, MsgKind, SimRole, ms_to_us, ue_node
from .base import CoordinationStrategy

logger = logging.getLogger(__name__)


def _has_carrier(dev, rt) -> bool:
    return any(o is not rt for o in dev.sims)


class PushNotification(CoordinationStrategy):
    """s08 - paging server pushes over the other network's user plane after d_push"""
    strategy_id = 8

    def on_registration(self, ctx, dev):
        for rt in dev.sims:
            if rt.network.generation is not Generation.G5 or not _has_carrier(dev, rt):
                continue
            ctx.send(MsgKind.PagingEventRegistration, ue_node(dev.id), rt.network.core_node,
                     dev.id, rt.index, strategy=self.strategy_id)
            rt.push_registered = True

    def on_mt_arrival(self, ctx, dev, rt, mt) -> bool:
        if rt.push_registered:
            ctx.deliver_via_other(dev, rt, [mt], MsgKind.PushNotification,
                                  ms_to_us(self.params.s08_push_delay_ms), self.strategy_id,
                                  paging_continues=True)
        # direct paging in the MT network runs independently
        return False


class Non3gppNotification(CoordinationStrategy):
    """s09 - the secondary core reroutes its notification through the N3IWF"""
    strategy_id = 9

    def monitors(self, dev, rt) -> bool:
        return rt.profile.role is not SimRole.SECONDARY

    def on_registration(self, ctx, dev):
        for rt in dev.sims:
            if rt.profile.role is not SimRole.SECONDARY:
                continue
            if not ctx.n3iwf_registered:
                raise NotApplicableError(self.strategy_id, "no prior non-3GPP (N3IWF) registration")
            ctx.send(MsgKind.N3iwfRegistration, ue_node(dev.id), rt.network.core_node,
                     dev.id, rt.index, strategy=self.strategy_id)

    def on_mt_arrival(self, ctx, dev, rt, mt) -> bool:
        if rt.profile.role is not SimRole.SECONDARY:
            return False
        ctx.deliver_via_other(dev, rt, [mt], MsgKind.N3iwfNotification, 0, self.strategy_id)
        return True


class SmsNotification(CoordinationStrategy):
    """s10 - notification as an SMS on the primary SIM; long-tailed delay"""
    strategy_id = 10

    def monitors(self, dev, rt) -> bool:
        return rt.profile.role is not SimRole.SECONDARY

    def sms_delay_us(self, rng) -> int:
        """Shifted exponential: fixed minimum plus an exponential tail"""
        low = ms_to_us(self.params.s10_sms_min_ms)
        tail = ms_to_us(self.params.s10_sms_mean_ms) - low
        return low + (int(rng.exponential(tail)) if tail > 0 else 0)

    def on_mt_arrival(self, ctx, dev, rt, mt) -> bool:
        if rt.profile.role is not SimRole.SECONDARY:
            return False
        delay_us = self.sms_delay_us(ctx.stream(dev.id, rt.index, 'sms'))
        ctx.deliver_via_other(dev, rt, [mt], MsgKind.SmsNotification, delay_us, self.strategy_id)
        return True
