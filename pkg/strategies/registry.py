"""
Strategy id -> plugin class
"""
from typing import Dict, List, Type
import logging

from domain.errors import NotApplicableError
from .base import CoordinationStrategy
from .catalog import CATALOG, StrategyStack
from .collision import AlternativeUeId, ConsecutivePos, NasParamChange, PagingOffset
from .general import (
    BusyIndication, GracefulLeaving, LeaveAndReturn, LocalLeaving, PagingCause, SchedulingGap, ShortAbsence,
)
from .notification import Non3gppNotification, PushNotification, SmsNotification

logger = logging.getLogger(__name__)

STRATEGY_CLASSES: Dict[int, Type[CoordinationStrategy]] = {
    cls.strategy_id: cls for cls in (
        PagingCause, ShortAbsence, BusyIndication, LocalLeaving, GracefulLeaving, LeaveAndReturn,
        SchedulingGap, PushNotification, Non3gppNotification, SmsNotification,
        NasParamChange, AlternativeUeId, PagingOffset, ConsecutivePos,
    )
}

assert set(STRATEGY_CLASSES) == set(CATALOG), "every catalogued strategy needs a plugin"


def build_strategies(stack: StrategyStack) -> List[CoordinationStrategy]:
    """Instantiate the active strategies in composition order"""
    plugins = []
    for sid in stack.active:
        if sid not in STRATEGY_CLASSES:
            raise NotApplicableError(sid, "unknown strategy id (valid: 1-14)")
    for sid in stack.ordered():
        plugins.append(STRATEGY_CLASSES[sid](stack.params))
    logger.debug(f"[Strategies] stack {stack.label}: {plugins}")
    return plugins
