"""
Shared vocabulary: identities, RRC/MM states, services and control-plane messages
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Set
import logging

from .errors import StateInvariantError

logger = logging.getLogger(__name__)

US_PER_MS = 1000
NEVER = 2 ** 62  # open-ended interval end / disabled timer


def ms_to_us(ms: float) -> int:
    """Convert simulated milliseconds to integer microseconds"""
    return int(round(ms * US_PER_MS))


def us_to_ms(us: int) -> float:
    return us / US_PER_MS


class Generation(Enum):
    G4 = "4G"
    G5 = "5G"


class CnState(Enum):
    DEREGISTERED = "DEREGISTERED"
    IDLE = "IDLE"
    CONNECTED = "CONNECTED"


class RanState(Enum):
    IDLE = "IDLE"
    INACTIVE = "INACTIVE"
    CONNECTED = "CONNECTED"


class SimRole(Enum):
    PRIMARY = "PRIMARY"
    SECONDARY = "SECONDARY"


class DeviceMode(Enum):
    DSDS = "DSDS"  # shared transceiver, time-multiplexed
    DSDA = "DSDA"  # transceiver per SIM


class ServiceKind(Enum):
    VOICE = "VOICE"
    SMS = "SMS"
    DATA = "DATA"
    EMERGENCY = "EMERGENCY"


class Plane(Enum):
    USER = "USER"
    CONTROL = "CONTROL"


class Activity(Enum):
    """What the device is doing on its serving SIM when something new arrives"""
    IDLE = "IDLE"
    VOICE_CALL = "VOICE_CALL"
    DATA_SESSION = "DATA_SESSION"
    SMS_TRANSFER = "SMS_TRANSFER"
    EMERGENCY_CALL = "EMERGENCY_CALL"


ACTIVITY_FOR_SERVICE = {
    ServiceKind.VOICE: Activity.VOICE_CALL,
    ServiceKind.DATA: Activity.DATA_SESSION,
    ServiceKind.SMS: Activity.SMS_TRANSFER,
    ServiceKind.EMERGENCY: Activity.EMERGENCY_CALL,
}


class PolicyAction(Enum):
    ACCEPT_LEAVE = "ACCEPT_LEAVE"
    NOTIFY_ONLY = "NOTIFY_ONLY"
    REJECT_BUSY = "REJECT_BUSY"
    IGNORE = "IGNORE"


class Segment(Enum):
    RAN = "RAN"
    CN = "CN"
    INTER_PLMN = "INTER_PLMN"


class Stratum(Enum):
    AS = "AS"
    NAS = "NAS"
    INTER = "INTER"


STRATUM_WEIGHT = {Stratum.AS: 1, Stratum.NAS: 2, Stratum.INTER: 3}
STRATUM_SEGMENT = {Stratum.AS: Segment.RAN, Stratum.NAS: Segment.CN, Stratum.INTER: Segment.INTER_PLMN}


class MsgKind(Enum):
    # paging
    PageCn = "PageCn"
    PageRan = "PageRan"
    PagingResponse = "PagingResponse"
    BusyIndication = "BusyIndication"
    DownlinkDataNotification = "DownlinkDataNotification"
    # connection management
    ServiceRequest = "ServiceRequest"
    RandomAccess = "RandomAccess"
    RrcSetup = "RrcSetup"
    InitialContextSetup = "InitialContextSetup"
    RrcRelease = "RrcRelease"
    RrcSuspend = "RrcSuspend"
    RrcResume = "RrcResume"
    RrcResumeComplete = "RrcResumeComplete"
    # registration / mobility
    RegistrationRequest = "RegistrationRequest"
    RegistrationAccept = "RegistrationAccept"
    TauRequest = "TauRequest"
    RauRequest = "RauRequest"
    RnaUpdate = "RnaUpdate"
    GutiReassignment = "GutiReassignment"
    # leaving / absence
    AbsenceNotice = "AbsenceNotice"
    ReturnNotice = "ReturnNotice"
    LeavingNotice = "LeavingNotice"
    LeaveRequest = "LeaveRequest"
    LeaveConfirm = "LeaveConfirm"
    SchedulingGapRequest = "SchedulingGapRequest"
    SchedulingGapGrant = "SchedulingGapGrant"
    SchedulingGapDeny = "SchedulingGapDeny"
    # collision avoidance
    AssistanceInfo = "AssistanceInfo"
    AltUeIdRequest = "AltUeIdRequest"
    AltUeIdConfirm = "AltUeIdConfirm"
    OffsetAssignment = "OffsetAssignment"
    # cross-network notification
    PagingEventRegistration = "PagingEventRegistration"
    N3iwfRegistration = "N3iwfRegistration"
    PushNotification = "PushNotification"
    SmsNotification = "SmsNotification"
    N3iwfNotification = "N3iwfNotification"


_AS_KINDS = {
    MsgKind.PageRan, MsgKind.RandomAccess, MsgKind.RrcSetup, MsgKind.RrcRelease,
    MsgKind.RrcSuspend, MsgKind.RrcResume, MsgKind.RrcResumeComplete, MsgKind.RnaUpdate,
    MsgKind.AbsenceNotice, MsgKind.ReturnNotice, MsgKind.LeavingNotice,
    MsgKind.SchedulingGapRequest, MsgKind.SchedulingGapGrant, MsgKind.SchedulingGapDeny,
}
_INTER_KINDS = {MsgKind.PushNotification, MsgKind.SmsNotification, MsgKind.N3iwfNotification}

MESSAGE_STRATUM: Dict[MsgKind, Stratum] = {
    kind: (Stratum.AS if kind in _AS_KINDS else Stratum.INTER if kind in _INTER_KINDS else Stratum.NAS)
    for kind in MsgKind
}

PAGING_CAUSE_KINDS = {MsgKind.PageCn, MsgKind.PageRan, MsgKind.DownlinkDataNotification}

# Connection establishment sequences; their weights make resume cheaper than setup
SETUP_SEQUENCE = (MsgKind.RandomAccess, MsgKind.RrcSetup, MsgKind.ServiceRequest, MsgKind.InitialContextSetup)
PAGED_SETUP_SEQUENCE = (MsgKind.RandomAccess, MsgKind.RrcSetup, MsgKind.PagingResponse, MsgKind.InitialContextSetup)
RESUME_SEQUENCE = (MsgKind.RandomAccess, MsgKind.RrcResume, MsgKind.RrcResumeComplete)


def message_weight(kind: MsgKind) -> int:
    return STRATUM_WEIGHT[MESSAGE_STRATUM[kind]]


def sequence_weight(kinds) -> int:
    return sum(message_weight(k) for k in kinds)


@dataclass(frozen=True)
class LinkDelays:
    """One-way link delay per signaling stratum, in microseconds"""
    as_us: int = 2_000
    nas_us: int = 10_000
    inter_us: int = 30_000

    @classmethod
    def from_ms(cls, as_ms: float, nas_ms: float, inter_ms: float) -> 'LinkDelays':
        return cls(ms_to_us(as_ms), ms_to_us(nas_ms), ms_to_us(inter_ms))

    def for_kind(self, kind: MsgKind) -> int:
        stratum = MESSAGE_STRATUM[kind]
        if stratum is Stratum.AS:
            return self.as_us
        if stratum is Stratum.NAS:
            return self.nas_us
        return self.inter_us

    def sequence_us(self, kinds) -> int:
        return sum(self.for_kind(k) for k in kinds)


@dataclass(frozen=True)
class ServiceType:
    kind: ServiceKind
    plane: Plane
    priority: int


DEFAULT_PRIORITIES = {
    ServiceKind.EMERGENCY: 4,
    ServiceKind.VOICE: 3,
    ServiceKind.SMS: 2,
    ServiceKind.DATA: 1,
}

SERVICE_PLANE = {
    ServiceKind.VOICE: Plane.USER,
    ServiceKind.DATA: Plane.USER,
    ServiceKind.SMS: Plane.CONTROL,
    ServiceKind.EMERGENCY: Plane.CONTROL,
}

_PRIORITY_ORDER = (ServiceKind.EMERGENCY, ServiceKind.VOICE, ServiceKind.SMS, ServiceKind.DATA)


def service_catalog(priorities: Optional[Dict[ServiceKind, int]] = None) -> Dict[ServiceKind, ServiceType]:
    """
    Build the ServiceType table

    Priorities are configurable but must keep EMERGENCY > VOICE > SMS > DATA.
    """
    prio = dict(DEFAULT_PRIORITIES)
    if priorities:
        prio.update(priorities)
    ordered = [prio[k] for k in _PRIORITY_ORDER]
    if any(a <= b for a, b in zip(ordered, ordered[1:])):
        raise ValueError(f"Service priorities must be strictly ordered EMERGENCY > VOICE > SMS > DATA, got {prio}")
    return {k: ServiceType(kind=k, plane=SERVICE_PLANE[k], priority=prio[k]) for k in ServiceKind}


@dataclass(frozen=True)
class UeIdentity:
    """Long-term and temporary identities of one SIM"""
    imsi: int
    temporal_cn_id: int = 0
    temporal_ran_id: int = 0
    refresh_period_us: Optional[int] = None  # None = never refreshed


LEGAL_STATE_PAIRS = {
    (CnState.DEREGISTERED, RanState.IDLE),
    (CnState.IDLE, RanState.IDLE),
    (CnState.CONNECTED, RanState.IDLE),  # transitional only
    (CnState.CONNECTED, RanState.INACTIVE),
    (CnState.CONNECTED, RanState.CONNECTED),
}


@dataclass
class SimProfile:
    """One SIM registration as seen from the device"""
    sim_index: int
    plmn_id: int
    generation: Generation
    identity: UeIdentity
    role: SimRole = SimRole.PRIMARY
    cn_state: CnState = CnState.DEREGISTERED
    ran_state: RanState = RanState.IDLE
    current_cell: int = 0
    current_ta: int = 0
    ta_list: Set[int] = field(default_factory=set)
    paging_shift_us: int = 0  # multi-SIM paging offset (s11 fallback / s13)
    alt_ue_id: Optional[int] = None  # s12 proposal
    alt_ue_id_confirmed: bool = False
    rna_ta: Optional[int] = None  # anchor TA of the RNA while INACTIVE
    pending_update: bool = False  # location update held back by a busy transmitter

    @property
    def state_name(self) -> str:
        """Collapsed state: DEREGISTERED, IDLE, INACTIVE or CONNECTED"""
        if self.cn_state is CnState.DEREGISTERED:
            return 'DEREGISTERED'
        if self.ran_state is RanState.CONNECTED:
            return 'CONNECTED'
        if self.ran_state is RanState.INACTIVE:
            return 'INACTIVE'
        return 'IDLE'

    @property
    def is_connected(self) -> bool:
        return self.ran_state is RanState.CONNECTED

    @property
    def is_inactive(self) -> bool:
        return self.ran_state is RanState.INACTIVE

    @property
    def is_idle(self) -> bool:
        return self.cn_state is CnState.IDLE

    def check_states(self):
        """Raise StateInvariantError when the profile breaks a state invariant"""
        pair = (self.cn_state, self.ran_state)
        if pair not in LEGAL_STATE_PAIRS:
            raise StateInvariantError(f"SIM {self.sim_index}: illegal state pair {pair[0].value}/{pair[1].value}")
        if self.ran_state is RanState.INACTIVE and self.generation is not Generation.G5:
            raise StateInvariantError(f"SIM {self.sim_index}: INACTIVE on a {self.generation.value} network")
        if self.cn_state is not CnState.DEREGISTERED and self.current_ta not in self.ta_list:
            raise StateInvariantError(f"SIM {self.sim_index}: current TA {self.current_ta} not in TA list")


@dataclass
class UeDevice:
    """A multi-SIM terminal"""
    device_id: int
    sims: List[SimProfile]
    num_rx: int = 1
    num_tx: int = 1
    mode: DeviceMode = DeviceMode.DSDS
    switch_delay_us: int = 5_000
    policy: Optional['PolicyTable'] = None  # noqa: F821 - domain.policy

    def validate(self) -> List[str]:
        errors = []
        if len(self.sims) < 2:
            errors.append(f"device {self.device_id}: needs at least 2 SIMs")
        if self.num_rx not in (1, 2):
            errors.append(f"device {self.device_id}: num_rx must be 1 or 2")
        if self.num_tx != 1:
            errors.append(f"device {self.device_id}: num_tx must be 1")
        if self.mode is DeviceMode.DSDA and self.num_rx < 2:
            errors.append(f"device {self.device_id}: DSDA requires num_rx >= 2")
        if self.switch_delay_us < 0:
            errors.append(f"device {self.device_id}: switch_delay must be >= 0")
        return errors

    @property
    def shared_receiver(self) -> bool:
        return self.num_rx < 2

    def sim(self, index: int) -> SimProfile:
        return self.sims[index]

    def others(self, index: int) -> List[SimProfile]:
        return [s for s in self.sims if s.sim_index != index]

    def primary(self) -> SimProfile:
        for s in self.sims:
            if s.role is SimRole.PRIMARY:
                return s
        return self.sims[0]


@dataclass(frozen=True)
class SimMessage:
    """Typed control-plane message; one record per send"""
    kind: MsgKind
    origin: str
    destination: str
    device_id: int
    sim_index: Optional[int]
    timestamp_us: int
    delivered_us: int
    service: Optional[ServiceKind] = None
    paging_cause: Optional[ServiceKind] = None
    strategy: Optional[int] = None
    size_weight: int = 0

    def __post_init__(self):
        if self.paging_cause is not None and self.kind not in PAGING_CAUSE_KINDS:
            raise ValueError(f"paging_cause not allowed on {self.kind.value}")
        if self.delivered_us < self.timestamp_us:
            raise ValueError("message delivered before it was sent")

    @property
    def segment(self) -> Segment:
        return STRATUM_SEGMENT[MESSAGE_STRATUM[self.kind]]


def make_message(kind: MsgKind, origin: str, destination: str, device_id: int,
                 sim_index: Optional[int], now_us: int, delays: LinkDelays,
                 service: Optional[ServiceKind] = None,
                 paging_cause: Optional[ServiceKind] = None,
                 strategy: Optional[int] = None) -> SimMessage:
    """Create a message with its default size weight and link delay applied"""
    return SimMessage(
        kind=kind,
        origin=origin,
        destination=destination,
        device_id=device_id,
        sim_index=sim_index,
        timestamp_us=now_us,
        delivered_us=now_us + delays.for_kind(kind),
        service=service,
        paging_cause=paging_cause,
        strategy=strategy,
        size_weight=message_weight(kind),
    )


def ue_node(device_id: int) -> str:
    return f"ue:{device_id}"


def ran_node(plmn_name: str, generation: Generation) -> str:
    return f"{'gnb' if generation is Generation.G5 else 'enb'}:{plmn_name}"


def core_node(plmn_name: str, generation: Generation) -> str:
    return f"{'amf' if generation is Generation.G5 else 'mme'}:{plmn_name}"
