"""
Strategy catalog: descriptors of the 14 coordination solutions, the applicability
matrix and stack validation
"""
from dataclasses import dataclass, field, fields
from enum import Enum
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple
import logging

import config
from domain.errors import NotApplicableError
from domain.types import Generation, MsgKind

logger = logging.getLogger(__name__)


class StrategyGroup(Enum):
    GENERAL = "GENERAL"
    SINGLE_RXTX_NOTIFY = "SINGLE_RXTX_NOTIFY"
    COLLISION_AVOIDANCE = "COLLISION_AVOIDANCE"


# Registration-time group first, then MT arrival, then page / user decision
GROUP_ORDER = {
    StrategyGroup.COLLISION_AVOIDANCE: 0,
    StrategyGroup.SINGLE_RXTX_NOTIFY: 1,
    StrategyGroup.GENERAL: 2,
}

RAN_BASED = 'RAN'
CN_BASED = 'CN'


@dataclass(frozen=True)
class StrategyDescriptor:
    id: int
    name: str
    group: StrategyGroup
    ran_based: bool
    cn_based: bool
    supports_5g: bool
    supports_4g: bool
    new_message_kinds: Tuple[MsgKind, ...] = ()

    @property
    def impacted_nodes(self) -> Tuple[str, ...]:
        nodes = ['UE']
        if self.ran_based:
            nodes.append('RAN')
        if self.cn_based:
            nodes.append('CN')
        return tuple(nodes)

    @property
    def complexity(self) -> int:
        """New message kinds plus node types whose handlers change"""
        return len(self.new_message_kinds) + len(self.impacted_nodes)


_G = StrategyGroup.GENERAL
_N = StrategyGroup.SINGLE_RXTX_NOTIFY
_C = StrategyGroup.COLLISION_AVOIDANCE

#                         id  name                      group RAN    CN     5G    4G
CATALOG: Dict[int, StrategyDescriptor] = {d.id: d for d in (
    StrategyDescriptor(1, "Paging cause", _G, True, True, True, True),
    StrategyDescriptor(2, "Short absence", _G, True, False, True, True, (MsgKind.AbsenceNotice,)),
    StrategyDescriptor(3, "Busy indication", _G, True, True, True, False, (MsgKind.BusyIndication,)),
    StrategyDescriptor(4, "Local leaving", _G, True, True, True, True, (MsgKind.LeavingNotice,)),
    StrategyDescriptor(5, "Graceful leaving", _G, True, True, True, True,
                       (MsgKind.LeavingNotice, MsgKind.ReturnNotice)),
    StrategyDescriptor(6, "Leave and return", _G, False, True, True, True,
                       (MsgKind.LeaveRequest, MsgKind.LeaveConfirm)),
    StrategyDescriptor(7, "Scheduling gap", _G, True, True, True, False,
                       (MsgKind.SchedulingGapRequest, MsgKind.SchedulingGapGrant, MsgKind.SchedulingGapDeny)),
    StrategyDescriptor(8, "Push notification", _N, False, True, True, False,
                       (MsgKind.PagingEventRegistration, MsgKind.PushNotification)),
    StrategyDescriptor(9, "Non-3GPP notification", _N, False, True, True, True,
                       (MsgKind.N3iwfRegistration, MsgKind.N3iwfNotification)),
    StrategyDescriptor(10, "SMS notification", _N, False, True, True, True, (MsgKind.SmsNotification,)),
    StrategyDescriptor(11, "NAS parameter change", _C, False, True, True, False, (MsgKind.AssistanceInfo,)),
    StrategyDescriptor(12, "Alternative UE ID", _C, False, True, True, False,
                       (MsgKind.AltUeIdRequest, MsgKind.AltUeIdConfirm)),
    StrategyDescriptor(13, "Paging offset", _C, True, True, True, True, (MsgKind.OffsetAssignment,)),
    StrategyDescriptor(14, "Consecutive POs", _C, True, True, True, True),
)}

PAGING_TIMING_STRATEGIES = frozenset({11, 12, 13})
LEAVE_STRATEGIES = (4, 5, 6)


def descriptor(strategy_id: int) -> StrategyDescriptor:
    try:
        return CATALOG[strategy_id]
    except KeyError:
        raise NotApplicableError(strategy_id, "unknown strategy id (valid: 1-14)") from None


def applicability_violations(strategy_id: int, generations: Iterable[Generation],
                             basing: Optional[str] = None) -> List[str]:
    """Reasons a strategy cannot run on the given generation mix / basing"""
    if strategy_id not in CATALOG:
        return [f"unknown strategy id {strategy_id} (valid: 1-14)"]
    d = CATALOG[strategy_id]
    gens = set(generations)
    errors = []
    if not d.supports_4g and Generation.G5 not in gens:
        errors.append(f"{d.name} requires 5G")
    if not d.supports_5g and Generation.G4 not in gens:
        errors.append(f"{d.name} requires 4G")
    if basing == RAN_BASED and not d.ran_based:
        errors.append(f"{d.name} is not RAN-based")
    if basing == CN_BASED and not d.cn_based:
        errors.append(f"{d.name} is not CN-based")
    return errors


def applicability(strategy_id: int, generations: Iterable[Generation], basing: Optional[str] = None) -> bool:
    """
    Look up the applicability matrix

    Args:
        strategy_id: 1-14
        generations: Generations of the networks in the scenario
        basing: Optional 'RAN' or 'CN' to require that basing

    Returns:
        True when the strategy may be used
    """
    return not applicability_violations(strategy_id, generations, basing)


@dataclass
class StrategyParams:
    """Per-strategy parameters; scenario files override by field name"""
    s02_max_absence_ms: float = 1000.0
    s02_data_policy: str = 'discard'
    s04_suspend: bool = False
    s05_inactive_threshold_ms: float = field(default_factory=lambda: config.INACTIVE_THRESHOLD_MS)
    s06_hold_ms: float = field(default_factory=lambda: config.HOLD_INTERVAL_MS)
    s06_variant: str = 'cn'
    s07_grant_probability: float = field(default_factory=lambda: config.GAP_GRANT_PROBABILITY)
    s08_push_delay_ms: float = field(default_factory=lambda: config.PUSH_DELAY_MS)
    s10_sms_min_ms: float = field(default_factory=lambda: config.SMS_DELAY_MIN_MS)
    s10_sms_mean_ms: float = field(default_factory=lambda: config.SMS_DELAY_MEAN_MS)
    s11_fit_attempts: int = field(default_factory=lambda: config.GUTI_FIT_ATTEMPTS)
    s12_search_attempts: int = 16
    busy_while_inactive: bool = field(default_factory=lambda: config.BUSY_WHILE_INACTIVE)

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]]) -> 'StrategyParams':
        known = {f.name for f in fields(cls)}
        unknown = set(data or {}) - known
        if unknown:
            raise ValueError(f"unknown strategy parameters: {sorted(unknown)}")
        return cls(**(data or {}))

    def validate(self) -> List[str]:
        errors = []
        if self.s02_data_policy not in ('discard', 'buffer'):
            errors.append("s02_data_policy must be 'discard' or 'buffer'")
        if self.s06_variant not in ('cn', 'ran'):
            errors.append("s06_variant must be 'cn' or 'ran'")
        if not 0.0 <= self.s07_grant_probability <= 1.0:
            errors.append("s07_grant_probability must lie in [0, 1]")
        if self.s10_sms_mean_ms < self.s10_sms_min_ms:
            errors.append("s10_sms_mean_ms must be >= s10_sms_min_ms")
        for name in ('s02_max_absence_ms', 's05_inactive_threshold_ms', 's06_hold_ms',
                     's08_push_delay_ms', 's10_sms_min_ms'):
            if getattr(self, name) < 0:
                errors.append(f"{name} must be >= 0")
        if self.s11_fit_attempts < 0 or self.s12_search_attempts < 1:
            errors.append("s11_fit_attempts must be >= 0 and s12_search_attempts >= 1")
        return errors

    def to_dict(self) -> Dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass
class StrategyStack:
    active: Tuple[int, ...] = ()
    params: StrategyParams = field(default_factory=StrategyParams)

    def __post_init__(self):
        self.active = tuple(self.active)

    def has(self, strategy_id: int) -> bool:
        return strategy_id in self.active

    @property
    def label(self) -> str:
        return '+'.join(str(s) for s in self.active) if self.active else 'baseline'

    def ordered(self) -> List[int]:
        """Composition order: group first, then list order inside the group"""
        valid = [s for s in self.active if s in CATALOG]
        return sorted(valid, key=lambda s: (GROUP_ORDER[CATALOG[s].group], self.active.index(s)))

    def validate(self, generations: Sequence[Generation], n3iwf_registered: bool = True,
                 inter_operator_link: bool = True) -> List[str]:
        errors = []
        seen = set()
        for sid in self.active:
            if sid in seen:
                errors.append(f"strategy {sid} listed twice")
            seen.add(sid)
            errors += applicability_violations(sid, generations)
        timing = PAGING_TIMING_STRATEGIES & seen
        if len(timing) > 1:
            errors.append(f"at most one of strategies 11, 12, 13 may be active (got {sorted(timing)})")
        if 9 in seen and not n3iwf_registered:
            errors.append(f"{CATALOG[9].name} requires a prior non-3GPP (N3IWF) registration")
        if 8 in seen and not inter_operator_link:
            errors.append(f"{CATALOG[8].name} requires an inter-operator link to the paging server")
        errors += self.params.validate()
        return errors
