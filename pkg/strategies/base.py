"""
Strategy plugin interface

A strategy intercepts engine events (registration, MT arrival, page
decisions, leaving) and injects its own message flow through the engine
context. Hooks return a falsy value to let the next strategy or the engine
default handle the event.
"""
from dataclasses import dataclass
from typing import List, Optional
import logging

from domain.types import RanState, ServiceKind
from .catalog import StrategyDescriptor, StrategyParams, descriptor

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LeavePlan:
    """How the device leaves its serving SIM for another one"""
    strategy: Optional[int]
    latency_us: int                        # from the decision until the device listens on the target
    release_state: Optional[RanState] = None  # None = uncoordinated, network finds out via RLF
    release_at_us: int = 0
    resume_on_return: bool = False         # paused session picked up when the device is free again
    away: bool = False                     # network buffers MT traffic instead of paging
    hold_us: Optional[int] = None          # page once after this interval
    hold_variant: str = 'cn'


class CoordinationStrategy:
    """Base class; every hook defaults to 'not handled'"""

    strategy_id: int = 0

    def __init__(self, params: StrategyParams):
        self.params = params

    @property
    def descriptor(self) -> StrategyDescriptor:
        return descriptor(self.strategy_id)

    @property
    def group(self):
        return self.descriptor.group

    def __repr__(self) -> str:
        return f"<{type(self).__name__} s{self.strategy_id:02d}>"

    # registration phase (group C and the s08/s09 registrations)

    def on_registration(self, ctx, dev):
        pass

    def on_ids_refreshed(self, ctx, dev, rt):
        pass

    def monitors(self, dev, rt) -> bool:
        """False when the SIM is reached only through a notification path"""
        return True

    # MT arrival (group B)

    def on_mt_arrival(self, ctx, dev, rt, mt) -> bool:
        """True when the strategy took over delivery and no paging should start"""
        return False

    # paging (group A and s14)

    def paging_cause(self, ctx, dev, rt, mts) -> Optional[ServiceKind]:
        return None

    def retry_on_collision(self) -> bool:
        return False

    def tune_away_mode(self, ctx, dev, rt, serving) -> Optional[str]:
        """How a shared receiver listens to rt's occasions while serving is connected"""
        return None

    def on_connected(self, ctx, dev, rt):
        pass

    def on_busy_page(self, ctx, dev, rt, serving) -> bool:
        """True when a busy reply was sent for a declined page"""
        return False

    def on_short_service(self, ctx, dev, serving, rt, absence_us: int) -> bool:
        """True when the service fits in a short absence from the serving network"""
        return False

    def on_leave(self, ctx, dev, serving, target, mts) -> Optional[LeavePlan]:
        return None

    def on_update_blocked(self, ctx, dev, rt, serving) -> bool:
        return False


def first_handled(strategies: List[CoordinationStrategy], hook: str, *args):
    """Call hook on each strategy in order and return the first truthy result"""
    for strategy in strategies:
        result = getattr(strategy, hook)(*args)
        if result:
            return result
    return None
