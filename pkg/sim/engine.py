"""
Discrete-event engine

Drives devices, networks and the strategy stack from one event queue and
writes the structured event log every metric is computed from.
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple
import itertools
import logging

from domain.errors import ConfigInvalidError
from domain.identity import draw_imsi, regenerate_temporal_ids
from domain.policy import match_policy
from domain.types import (
    ACTIVITY_FOR_SERVICE, DEFAULT_PRIORITIES, NEVER, PAGED_SETUP_SEQUENCE, RESUME_SEQUENCE, SERVICE_PLANE,
    SETUP_SEQUENCE, CnState, Generation, MsgKind, Plane, PolicyAction, RanState, ServiceKind, SimMessage,
    SimProfile, SimRole, UeDevice, UeIdentity, make_message, ms_to_us, sequence_weight, ue_node,
)
from mobility.manager import (
    INACTIVITY_TIMER, PAGING_RESPONSE, RADIO_LINK_FAILURE, RAN_PAGING_FAILURE, RELEASE, SERVICE_REQUEST,
    SUSPEND, MobilityManager, next_move,
)
from mobility.topology import NetworkModel
from paging.collision import CollisionReport, detect_collision_schedules
from paging.engine import MissReason, PagingProcedure, cn_scope_cells, sim_schedule
from paging.occasions import PagingSchedule, ScopeLevel
from strategies.base import LeavePlan, first_handled
from strategies.catalog import PAGING_TIMING_STRATEGIES
from strategies.registry import build_strategies
from .events import EventQueue, EventRecord, log_digest
from .radio import RadioArbiter, Resource
from .rng import GLOBAL, RngStreams

logger = logging.getLogger(__name__)


class MtOutcome(Enum):
    DELIVERED = "DELIVERED"
    DECLINED = "DECLINED"
    DISCARDED = "DISCARDED"
    FAILED = "FAILED"


@dataclass(eq=False)
class MtRecord:
    """One mobile-terminated arrival; resolved exactly once"""
    mt_id: int
    device_id: int
    sim_index: int
    service: ServiceKind
    arrival_us: int
    duration_us: int
    conflict: bool
    outcome: Optional[MtOutcome] = None
    first_page_us: Optional[int] = None


@dataclass
class Session:
    service: ServiceKind
    start_us: int
    end_us: int
    token: int
    short: bool = False
    gap_granted: bool = False


class SimRuntime:
    """Engine-side state of one SIM: device view plus what its network believes"""

    def __init__(self, profile: SimProfile, network: NetworkModel, manager: MobilityManager):
        self.profile = profile
        self.network = network
        self.manager = manager
        self.schedule: Optional[PagingSchedule] = None
        self.ran_schedule: Optional[PagingSchedule] = None
        self.monitored = True
        self.monitor_since_us: Optional[int] = None
        self.session: Optional[Session] = None
        self.paging: Optional[PagingProcedure] = None
        self.paging_mts: List[MtRecord] = []
        self.last_known_cell = 0
        self.ghost_until_us = -1          # network still believes CONNECTED after an unannounced leave
        self.away = False                 # network buffers MT traffic (s05, s06)
        self.held: List[MtRecord] = []
        self.hold_token = 0
        self.return_pending = False
        self.paused_service: Optional[ServiceKind] = None
        self.paused_remaining_us: Optional[int] = None
        self.inactive_token = 0
        self.push_registered = False

    @property
    def index(self) -> int:
        return self.profile.sim_index

    def __repr__(self) -> str:
        return f"<SimRuntime sim={self.index} {self.network.name} {self.profile.state_name}>"


class DeviceRuntime:
    def __init__(self, device: UeDevice, arbiter: RadioArbiter):
        self.device = device
        self.arbiter = arbiter
        self.sims: List[SimRuntime] = []
        self.position = 0
        self.tuning_until_us = -1
        self.tuning_to: Optional[int] = None

    @property
    def id(self) -> int:
        return self.device.device_id

    def serving(self, exclude: Optional[SimRuntime] = None) -> Optional[SimRuntime]:
        """SIM holding an ongoing session, if any"""
        for rt in self.sims:
            if rt is not exclude and rt.session is not None:
                return rt
        return None


@dataclass
class RunResult:
    scenario_id: str
    seed: int
    stack_label: str
    records: List[EventRecord]
    digest: str
    end_us: int
    classification: Dict[str, str] = field(default_factory=dict)

    @property
    def event_log(self) -> List[EventRecord]:
        return self.records

    @property
    def ledger(self):
        from metrics.ledger import compute_ledger
        return compute_ledger(self.records)


_RESPOND, _RESPOND_SHORT, _BUSY, _SILENT = 'respond', 'respond_short', 'busy', 'silent'

_NOTIFICATION_ORIGIN = {
    MsgKind.PushNotification: 'ps',
    MsgKind.N3iwfNotification: 'n3iwf',
    MsgKind.SmsNotification: 'smsc',
}


def _priority(service: ServiceKind) -> int:
    return DEFAULT_PRIORITIES[service]


class SimulationEngine:
    """
    One replication of one scenario

    Identical (scenario, seed) pairs produce identical event logs: every random
    draw comes from a named stream and ties in the queue break by insertion order.
    """

    def __init__(self, scenario, seed: Optional[int] = None):
        violations = scenario.validate()
        if violations:
            raise ConfigInvalidError(violations)
        self.scenario = scenario
        self.seed = scenario.seed if seed is None else int(seed)
        self.rng = RngStreams(self.seed)
        self.queue = EventQueue()
        self.records: List[EventRecord] = []
        self.now = 0
        self.horizon_us = scenario.horizon_us
        self.delays = scenario.delays
        self.stack = scenario.strategies
        self.params = self.stack.params
        self.strategies = build_strategies(self.stack)
        self.n3iwf_registered = scenario.n3iwf_registered
        self.inter_operator_link = scenario.inter_operator_link
        self.retry_interval_us = ms_to_us(scenario.page_retry_interval_ms)
        self.rlf_us = ms_to_us(scenario.rlf_timeout_ms)
        self.inactive_to_idle_us = ms_to_us(scenario.inactive_to_idle_s * 1000)
        self.refresh_period_us = (ms_to_us(scenario.refresh_period_s * 1000)
                                  if scenario.refresh_period_s else None)
        self.devices: List[DeviceRuntime] = []
        self.mts: List[MtRecord] = []
        self._tokens = itertools.count(1)
        self._timing_active = any(s.strategy_id in PAGING_TIMING_STRATEGIES for s in self.strategies)
        self._consecutive_retry = any(s.retry_on_collision() for s in self.strategies)

    # ================================================================== context API used by strategies

    def stream(self, device: int, sim: int, purpose: str):
        return self.rng.stream(device, sim, purpose)

    def schedule(self, at_us: int, kind: str, handler, *args):
        return self.queue.push(max(at_us, self.now), kind, handler, *args)

    def record(self, kind: str, device: Optional[int] = None, sim: Optional[int] = None,
               strategy: Optional[int] = None, node: str = '', at_us: Optional[int] = None, **data):
        self.records.append(EventRecord(
            time_us=self.now if at_us is None else int(at_us), kind=kind, node=node,
            device=device, sim=sim, strategy=strategy, data=data,
        ))

    def _emit_message(self, msg: SimMessage):
        self.records.append(EventRecord.from_message(msg))

    def send(self, kind: MsgKind, origin: str, destination: str, device_id: int, sim_index: Optional[int],
             at_us: Optional[int] = None, service: Optional[ServiceKind] = None,
             paging_cause: Optional[ServiceKind] = None, strategy: Optional[int] = None) -> SimMessage:
        msg = make_message(kind, origin, destination, device_id, sim_index,
                           self.now if at_us is None else at_us, self.delays,
                           service=service, paging_cause=paging_cause, strategy=strategy)
        self._emit_message(msg)
        return msg

    def refresh_schedules(self, dev: DeviceRuntime):
        """Re-derive paging schedules after an identity or offset change"""
        self._touch(dev)
        for rt in dev.sims:
            rt.schedule = sim_schedule(rt.profile, rt.network)
            rt.ran_schedule = sim_schedule(rt.profile, rt.network, ran=True) if rt.network.is_5g else rt.schedule
            if rt.paging is not None and not rt.paging.done:
                rt.paging.schedule = rt.ran_schedule if rt.paging.outcome.ran else rt.schedule

    def collision(self, dev: DeviceRuntime, a: SimRuntime, b: SimRuntime) -> CollisionReport:
        if not (a.monitored and b.monitored):
            return CollisionReport.none()
        return detect_collision_schedules(a.schedule, b.schedule, num_rx=dev.device.num_rx)

    def log_po_check(self, dev: DeviceRuntime, phase: str, effective: bool = True):
        for a, b in itertools.combinations(dev.sims, 2):
            report = self.collision(dev, a, b)
            self.record('po_check', dev.id, a.index, phase=phase, effective=effective, other=b.index,
                        colliding=report.collisions > 0, fraction=report.fraction_colliding,
                        systematic=report.systematic)

    def short_absence(self, dev: DeviceRuntime, serving: SimRuntime, absence_us: int, reason: str,
                      strategy: Optional[int] = None, target: Optional[SimRuntime] = None) -> int:
        """
        Leave the serving network briefly without releasing the connection

        Returns:
            Time the device is tuned to the other network
        """
        t = self.now
        sw = dev.device.switch_delay_us
        self.send(MsgKind.AbsenceNotice, ue_node(dev.id), serving.network.ran_node, dev.id, serving.index,
                  strategy=strategy)
        total = absence_us + 2 * sw
        dev.arbiter.carve(serving.index, t, t + total)
        self.record('interruption', dev.id, serving.index, strategy=strategy, duration_us=total, reason=reason)
        self._account_stalled_traffic(dev, serving, absence_us, strategy)
        if target is not None:
            dev.arbiter.reserve(Resource.TX, target.index, t + sw, t + sw + absence_us, purpose=reason)
        return t + sw

    def tx_burst(self, dev: DeviceRuntime, serving: SimRuntime, target: SimRuntime, duration_us: int,
                 reason: str, strategy: Optional[int] = None) -> int:
        """Borrow the transmitter for a single uplink message on another SIM"""
        t = self.now
        sw = dev.device.switch_delay_us
        dev.arbiter.carve(serving.index, t, t + duration_us + 2 * sw)
        dev.arbiter.reserve(Resource.TX, target.index, t + sw, t + sw + duration_us, purpose=reason)
        self.record('interruption', dev.id, serving.index, strategy=strategy,
                    duration_us=duration_us + 2 * sw, reason=reason)
        return t + sw

    def flush_update(self, dev: DeviceRuntime, rt: SimRuntime, at_us: int):
        if rt.manager.flush_pending(rt.profile, at_us) is not None:
            rt.last_known_cell = rt.profile.current_cell

    def deliver_via_other(self, dev: DeviceRuntime, target: SimRuntime, mts: List[MtRecord], kind: MsgKind,
                          delay_us: int, strategy: int, paging_continues: bool = False):
        """Send a notification for target's MT traffic over another SIM after delay_us"""
        carrier = next((o for o in dev.sims if o is not target), None)
        if carrier is None:
            self._notification_lost(dev, target, mts, strategy, paging_continues)
            return
        self.schedule(self.now + delay_us, 'notification_send', self._on_notification_send,
                      dev, target, carrier, list(mts), kind, strategy, paging_continues)

    # ================================================================== run

    def run(self) -> RunResult:
        sc = self.scenario
        logger.info(f"[Engine] {sc.scenario_id} seed={self.seed} stack={self.stack.label} "
                    f"devices={sc.devices.count} horizon={sc.horizon_s}s")
        self._setup()
        processed = 0
        while self.queue and self.queue.peek_time() <= self.horizon_us:
            event = self.queue.pop()
            self.now = event.time_us
            event.handler(*event.args)
            for arg in event.args:
                if isinstance(arg, DeviceRuntime):
                    for rt in arg.sims:
                        rt.profile.check_states()
            processed += 1
        end_us = self.horizon_us
        self.now = end_us
        self._finalize(end_us)
        digest = log_digest(self.records)
        logger.info(f"[Engine] {sc.scenario_id} seed={self.seed} done: {processed} events, "
                    f"{len(self.mts)} MT arrivals, {len(self.records)} records, digest {digest[:12]}")
        return RunResult(sc.scenario_id, self.seed, self.stack.label, self.records, digest, end_us,
                         sc.classify())

    def _setup(self):
        sc = self.scenario
        for d in range(sc.devices.count):
            self.devices.append(self._build_device(d))
        for dev in self.devices:
            self._register_device(dev)
        for dev in self.devices:
            for rt in dev.sims:
                self._schedule_traffic(dev, rt)
                if self.refresh_period_us:
                    self._schedule_refresh(dev, rt)
            self._schedule_move(dev)

    def _build_device(self, d: int) -> DeviceRuntime:
        sc = self.scenario
        spec = sc.devices
        profiles = []
        for i, net_index in enumerate(spec.sim_networks):
            net = sc.networks[net_index]
            identity = UeIdentity(imsi=draw_imsi(self.stream(d, i, 'imsi')), refresh_period_us=self.refresh_period_us)
            profiles.append(SimProfile(
                sim_index=i, plmn_id=net.plmn_id, generation=net.generation, identity=identity,
                role=SimRole.PRIMARY if i == 0 else SimRole.SECONDARY,
            ))
        device = UeDevice(device_id=d, sims=profiles, num_rx=spec.num_rx, num_tx=1, mode=spec.mode,
                          switch_delay_us=spec.switch_delay_us, policy=spec.policy)
        dev = DeviceRuntime(device, RadioArbiter(d, device.num_rx, device.num_tx, device.switch_delay_us))
        dev.position = int(self.stream(d, GLOBAL, 'position').integers(0, sc.positions))
        for profile in profiles:
            net = sc.networks[spec.sim_networks[profile.sim_index]]
            dev.sims.append(SimRuntime(profile, net, MobilityManager(net, self.delays, d, emit=self._emit_message)))
        for rt in dev.sims:
            rt.monitored = all(s.monitors(dev, rt) for s in self.strategies)
        return dev

    def _cell_of(self, dev: DeviceRuntime, rt: SimRuntime) -> int:
        return rt.network.topology.cell_at(dev.position, self.scenario.positions)

    def _register_device(self, dev: DeviceRuntime):
        for rt in dev.sims:
            cell = self._cell_of(dev, rt)
            rt.manager.register(rt.profile, cell, self.now, self.stream(dev.id, rt.index, 'identity'))
            rt.last_known_cell = cell
            self.record('registered', dev.id, rt.index, node=rt.network.core_node, network=rt.network.name,
                        generation=rt.network.generation.value, monitored=rt.monitored)
        self.refresh_schedules(dev)
        self.log_po_check(dev, 'registration', effective=not self._timing_active)
        for strategy in self.strategies:
            strategy.on_registration(self, dev)
        for rt in dev.sims:
            rt.monitor_since_us = self.now

    # ================================================================== traffic, mobility, refresh

    def _schedule_traffic(self, dev: DeviceRuntime, rt: SimRuntime):
        traffic = self.scenario.traffic
        scale = 1.0 if rt.profile.role is SimRole.PRIMARY else traffic.secondary_scale
        for service, rate in traffic.mt_rates_per_hour.items():
            self._schedule_arrival(dev, rt, service, rate * scale, False, 0)
        for service, rate in traffic.mo_rates_per_hour.items():
            self._schedule_arrival(dev, rt, service, rate * scale, True, 0)

    def _schedule_arrival(self, dev, rt, service: ServiceKind, rate: float, mo: bool, after_us: int):
        purpose = f"{'mo' if mo else 'mt'}:{service.value}"
        gap = self.scenario.traffic.interarrival_us(self.stream(dev.id, rt.index, purpose), rate)
        if gap is None or after_us + gap >= self.horizon_us:
            return
        if mo:
            self.queue.push(after_us + gap, 'mo_start', self._on_mo_start, dev, rt, service, rate)
        else:
            self.queue.push(after_us + gap, 'mt_arrival', self._on_mt_arrival, dev, rt, service, rate)

    def _schedule_move(self, dev: DeviceRuntime):
        dwell_mean = self.scenario.mobility.dwell_mean_us
        if not dwell_mean:
            return
        dwell, position = next_move(self.stream(dev.id, GLOBAL, 'mobility'), dev.position,
                                    self.scenario.positions, dwell_mean)
        if self.now + dwell < self.horizon_us:
            self.queue.push(self.now + dwell, 'move', self._on_move, dev, position)

    def _schedule_refresh(self, dev: DeviceRuntime, rt: SimRuntime):
        at = self.now + self.refresh_period_us
        if at < self.horizon_us:
            self.queue.push(at, 'id_refresh', self._on_refresh, dev, rt)

    def _on_move(self, dev: DeviceRuntime, position: int):
        self._touch(dev)
        dev.position = position
        for rt in dev.sims:
            cell = self._cell_of(dev, rt)
            p = rt.profile
            if cell == p.current_cell:
                continue
            serving = dev.serving(exclude=rt)
            was_pending = p.pending_update
            msg = rt.manager.on_move(p, cell, self.now, tx_free=serving is None)
            if msg is not None or (p.is_connected and rt.ghost_until_us <= self.now):
                rt.last_known_cell = cell
            if p.pending_update and not was_pending and serving is not None:
                self.record('update_deferred', dev.id, rt.index, cell=cell)
                first_handled(self.strategies, 'on_update_blocked', self, dev, rt, serving)
        self._schedule_move(dev)

    def _on_refresh(self, dev: DeviceRuntime, rt: SimRuntime):
        self._touch(dev)
        p = rt.profile
        p.identity = regenerate_temporal_ids(p.identity, self.stream(dev.id, rt.index, 'identity'))
        self.send(MsgKind.GutiReassignment, rt.network.core_node, ue_node(dev.id), dev.id, rt.index)
        if p.generation is Generation.G5:
            self.refresh_schedules(dev)
            self.log_po_check(dev, 'refresh', effective=not self._timing_active)
            for strategy in self.strategies:
                strategy.on_ids_refreshed(self, dev, rt)
        self._schedule_refresh(dev, rt)

    # ================================================================== receiver accounting

    def _monitor_schedule(self, rt: SimRuntime) -> PagingSchedule:
        return rt.ran_schedule if rt.profile.is_inactive else rt.schedule

    def _tune_away_mode(self, dev: DeviceRuntime, rt: SimRuntime, serving: SimRuntime) -> Optional[str]:
        for strategy in self.strategies:
            mode = strategy.tune_away_mode(self, dev, rt, serving)
            if mode:
                return mode
        return None

    def _touch(self, dev: DeviceRuntime):
        """Accrue receiver-on time for idle monitoring up to now"""
        for rt in dev.sims:
            since = rt.monitor_since_us
            if since is None:
                continue
            if self.now > since:
                self._accrue(dev, rt, since, self.now)
            rt.monitor_since_us = max(since, self.now)

    def _accrue(self, dev: DeviceRuntime, rt: SimRuntime, start_us: int, end_us: int):
        """Receiver time spent monitoring paging occasions; a connected SIM accrues nothing here"""
        p = rt.profile
        if not rt.monitored or p.cn_state is CnState.DEREGISTERED or p.is_connected:
            return
        schedule = self._monitor_schedule(rt)
        count = schedule.count_between(start_us, end_us)
        if count == 0:
            return
        window = schedule.window_us
        serving = dev.serving(exclude=rt)
        if serving is not None and dev.device.shared_receiver:
            mode = self._tune_away_mode(dev, rt, serving)
            if mode is None:
                return
            sw = dev.device.switch_delay_us
            strategy = 7 if mode == 'gap' else 2
            self.record('rx_on', dev.id, rt.index, duration_us=count * window, occasions=count, mode=mode)
            self.record('interruption', dev.id, serving.index, strategy=strategy,
                        duration_us=count * (window + 2 * sw), reason=mode, occasions=count)
            if mode == 'absence':
                times = schedule.times(end_us)
                for t in times[times >= start_us]:
                    self.send(MsgKind.AbsenceNotice, ue_node(dev.id), serving.network.ran_node, dev.id,
                              serving.index, at_us=int(t) - sw, strategy=strategy)
            return
        self.record('rx_on', dev.id, rt.index, duration_us=count * window, occasions=count, mode='idle')

    def _account_stalled_traffic(self, dev, serving: SimRuntime, absence_us: int, strategy: Optional[int]):
        if serving.session is None:
            return
        service = serving.session.service
        if service is ServiceKind.DATA and self.params.s02_data_policy == 'discard':
            self.record('traffic', dev.id, serving.index, strategy=strategy, service=service.value,
                        discarded_us=absence_us)
        else:
            self.record('traffic', dev.id, serving.index, strategy=strategy, service=service.value,
                        buffered_us=absence_us)

    def _can_hear(self, dev: DeviceRuntime, rt: SimRuntime, t_us: int,
                  scope: FrozenSet[int]) -> Tuple[bool, Optional[MissReason]]:
        if not rt.monitored:
            return False, MissReason.NOT_MONITORED
        if self._cell_of(dev, rt) not in scope:
            return False, MissReason.OUT_OF_SCOPE_DEFERRED if rt.profile.pending_update else MissReason.MOVED
        if dev.tuning_until_us > t_us and dev.tuning_to != rt.index:
            return False, MissReason.ABSENT
        shared = dev.device.shared_receiver
        serving = dev.serving(exclude=rt)
        if serving is not None:
            if shared and self._tune_away_mode(dev, rt, serving) is None:
                return False, MissReason.RX_BUSY
        elif shared:
            window = self._monitor_schedule(rt).window_us
            for other in dev.sims:
                op = other.profile
                if other is rt or not other.monitored or op.cn_state is CnState.DEREGISTERED or op.is_connected:
                    continue
                sched = self._monitor_schedule(other)
                start = sched.next_at_or_after(t_us - sched.window_us + 1)
                if start < t_us + window and (start < t_us or (start == t_us and other.index < rt.index)):
                    return False, MissReason.COLLISION
        loss = self.scenario.page_loss_probability
        if loss > 0 and self.stream(dev.id, rt.index, 'link').random() < loss:
            return False, MissReason.LINK_LOSS
        return True, None

    # ================================================================== MT traffic

    def _on_mt_arrival(self, dev: DeviceRuntime, rt: SimRuntime, service: ServiceKind, rate: float):
        self._touch(dev)
        self._schedule_arrival(dev, rt, service, rate, False, self.now)
        duration = self.scenario.traffic.duration_us(self.stream(dev.id, rt.index, 'duration'), service)
        mt = MtRecord(len(self.mts), dev.id, rt.index, service, self.now, duration,
                      conflict=dev.serving(exclude=rt) is not None)
        self.mts.append(mt)
        self.record('mt_arrival', dev.id, rt.index, mt_id=mt.mt_id, service=service.value, conflict=mt.conflict)
        self._handle_mt(dev, rt, mt)

    def _handle_mt(self, dev: DeviceRuntime, rt: SimRuntime, mt: MtRecord):
        p = rt.profile
        if rt.ghost_until_us > self.now:
            self._resolve(mt, MtOutcome.DISCARDED, self.now, reason='radio_link_lost')
            return
        if rt.away:
            rt.held.append(mt)
            self.record('mt_held', dev.id, rt.index, mt_id=mt.mt_id)
            return
        if p.is_connected:
            self._deliver_on_connection(dev, rt, [mt])
            return
        if first_handled(self.strategies, 'on_mt_arrival', self, dev, rt, mt):
            return
        self.start_paging(dev, rt, [mt])

    def _resolve(self, mt: MtRecord, outcome: MtOutcome, at_us: int, **data):
        if mt.outcome is not None:
            return
        mt.outcome = outcome
        if at_us > self.now:
            self.queue.push(at_us, 'mt_outcome', self._record_outcome, mt, at_us, data)
        else:
            self._record_outcome(mt, self.now, data)

    def _record_outcome(self, mt: MtRecord, at_us: int, data: dict):
        delivered = mt.outcome is MtOutcome.DELIVERED
        setup = at_us - mt.first_page_us if delivered and mt.first_page_us is not None else None
        self.record('mt_outcome', mt.device_id, mt.sim_index, at_us=at_us, mt_id=mt.mt_id,
                    outcome=mt.outcome.value, service=mt.service.value, conflict=mt.conflict,
                    latency_us=at_us - mt.arrival_us if delivered else None, setup_us=setup, **data)

    # ================================================================== paging

    def start_paging(self, dev: DeviceRuntime, rt: SimRuntime, mts: List[MtRecord],
                     levels: Optional[Sequence[ScopeLevel]] = None, max_attempts: Optional[int] = None,
                     absence_known: bool = False):
        p = rt.profile
        if p.is_connected:
            self._deliver_on_connection(dev, rt, mts)
            return
        if rt.paging is not None and not rt.paging.done:
            rt.paging_mts.extend(mts)
            return
        net = rt.network
        ran = p.is_inactive
        cause = None
        for strategy in self.strategies:
            cause = strategy.paging_cause(self, dev, rt, mts)
            if cause is not None:
                break
        if any(SERVICE_PLANE[mt.service] is Plane.USER for mt in mts):
            self.send(MsgKind.DownlinkDataNotification, f"smf:{net.name}", net.core_node, dev.id, rt.index,
                      paging_cause=cause)
        if ran:
            rna = net.topology.rna_cells(p.rna_ta if p.rna_ta is not None else p.current_ta)
            proc = PagingProcedure(rt.ran_schedule, (ScopeLevel.RNA,), lambda level: rna,
                                   max_attempts or net.paging.max_attempts, self.retry_interval_us,
                                   self._consecutive_retry, ran=True, cause=cause)
            start = self.now
        else:
            proc = PagingProcedure(rt.schedule, levels or net.paging.escalation_levels,
                                   lambda level: cn_scope_cells(net, p, level, rt.last_known_cell),
                                   max_attempts or net.paging.max_attempts, self.retry_interval_us,
                                   self._consecutive_retry, cause=cause)
            start = self.now + self.delays.nas_us
        proc.outcome.absence_known = absence_known
        rt.paging = proc
        rt.paging_mts = list(mts)
        self.queue.push(proc.first_attempt_at(start), 'page_attempt', self._on_page_attempt, dev, rt, proc)

    def _on_page_attempt(self, dev: DeviceRuntime, rt: SimRuntime, proc: PagingProcedure):
        if rt.paging is not proc or proc.done:
            return
        self._touch(dev)
        t = self.now
        net = rt.network
        ran = proc.outcome.ran
        consecutive = proc.next_is_consecutive
        self.send(MsgKind.PageRan if ran else MsgKind.PageCn, net.ran_node if ran else net.core_node,
                  ue_node(dev.id), dev.id, rt.index, paging_cause=proc.outcome.cause,
                  strategy=14 if consecutive else None)
        for mt in rt.paging_mts:
            if mt.first_page_us is None:
                mt.first_page_us = t

        heard, reason = self._can_hear(dev, rt, t, proc.scope())
        decision, latency = (_SILENT, 0)
        if heard:
            decision, latency = self._page_decision(dev, rt, proc)
            if decision is _SILENT:
                reason = MissReason.DECLINED_SILENT
        answered = decision in (_RESPOND, _RESPOND_SHORT, _BUSY)
        next_t = proc.record(t, answered=answered, reason=None if answered else reason, busy=decision is _BUSY)
        attempt = proc.outcome.attempts[-1]
        self.record('page_attempt', dev.id, rt.index, strategy=14 if consecutive else None,
                    level=attempt.level.value, scope_cells=attempt.scope_cells, attempt=attempt.attempt,
                    answered=answered, busy=decision is _BUSY, ran=ran,
                    reason=attempt.reason.value if attempt.reason else None)
        if decision in (_RESPOND, _RESPOND_SHORT):
            self._connect_and_deliver(dev, rt, rt.paging_mts, t + latency, PAGING_RESPONSE,
                                      short=decision is _RESPOND_SHORT)
        if next_t is None:
            self._finish_paging(dev, rt, proc)
        else:
            self.queue.push(next_t, 'page_attempt', self._on_page_attempt, dev, rt, proc)

    def _page_decision(self, dev: DeviceRuntime, rt: SimRuntime, proc: PagingProcedure) -> Tuple[str, int]:
        serving = dev.serving(exclude=rt)
        if serving is None:
            return _RESPOND, 0
        activity = ACTIVITY_FOR_SERVICE[serving.session.service]
        action = match_policy(dev.device.policy, proc.outcome.cause, activity)
        self.record('user_decision', dev.id, rt.index, action=action.value, activity=activity.value,
                    cause=proc.outcome.cause.value if proc.outcome.cause else None)
        return self._act_on_decision(dev, serving, rt, rt.paging_mts, action, PAGING_RESPONSE)

    def _act_on_decision(self, dev, serving: SimRuntime, rt: SimRuntime, mts: List[MtRecord],
                         action: PolicyAction, trigger: str) -> Tuple[str, int]:
        if action in (PolicyAction.ACCEPT_LEAVE, PolicyAction.NOTIFY_ONLY):
            absence = (rt.manager.connection_delay_us(rt.profile.state_name, trigger)
                       + max((mt.duration_us for mt in mts), default=0))
            if first_handled(self.strategies, 'on_short_service', self, dev, serving, rt, absence):
                return _RESPOND_SHORT, dev.device.switch_delay_us
            if action is PolicyAction.ACCEPT_LEAVE:
                return _RESPOND, self._apply_leave(dev, serving, rt, mts)
        if action is not PolicyAction.IGNORE and first_handled(self.strategies, 'on_busy_page',
                                                                 self, dev, rt, serving):
            return _BUSY, 0
        return _SILENT, 0

    def _finish_paging(self, dev: DeviceRuntime, rt: SimRuntime, proc: PagingProcedure):
        outcome = proc.outcome
        mts = rt.paging_mts
        rt.paging = None
        rt.paging_mts = []
        if outcome.failed and outcome.ran:
            outcome.buffer_discarded = True
        self.record('paging_outcome', dev.id, rt.index, mt_ids=[m.mt_id for m in mts], **outcome.to_dict())
        if outcome.responded:
            return
        if outcome.busy:
            for mt in mts:
                self._resolve(mt, MtOutcome.DECLINED, self.now, reason='busy_indication')
            return
        if outcome.ran:
            if rt.profile.is_inactive:
                rt.inactive_token += 1
                rt.manager.transition(rt.profile, RanState.IDLE, RAN_PAGING_FAILURE, self.now)
            self.record('ran_paging_failed', dev.id, rt.index, fallback=self.scenario.ran_failure_fallback_to_cn)
            if self.scenario.ran_failure_fallback_to_cn and not outcome.absence_known:
                self.start_paging(dev, rt, [m for m in mts if m.outcome is None])
                return
            for mt in mts:
                self._resolve(mt, MtOutcome.DISCARDED, self.now, reason='ran_paging_failed')
            return
        for mt in mts:
            self._resolve(mt, MtOutcome.FAILED, self.now, reason='paging_failed')

    # ================================================================== connections and sessions

    def _connect_and_deliver(self, dev: DeviceRuntime, rt: SimRuntime, mts: List[MtRecord], at_us: int,
                             trigger: str, short: bool = False, service: Optional[ServiceKind] = None,
                             duration_us: Optional[int] = None):
        p = rt.profile
        mts = list(mts)
        if p.is_connected:
            self._deliver_on_connection(dev, rt, mts)
            return
        if rt.paging is not None and not rt.paging.done:
            # answered through another path
            rt.paging.cancel(responded=True)
            mts += [m for m in rt.paging_mts if m not in mts]
            self.record('paging_outcome', dev.id, rt.index, mt_ids=[m.mt_id for m in rt.paging_mts],
                        cancelled=True, **rt.paging.outcome.to_dict())
            rt.paging = None
            rt.paging_mts = []
        if rt.held:
            mts += rt.held
            rt.held = []
            rt.away = False
            rt.hold_token += 1
        rt.inactive_token += 1
        source = p.state_name
        rt.manager.transition(p, RanState.CONNECTED, trigger, at_us)
        done = rt.manager.last_transition_done_us
        if source == 'INACTIVE':
            sequence = RESUME_SEQUENCE
        else:
            sequence = PAGED_SETUP_SEQUENCE if trigger == PAGING_RESPONSE else SETUP_SEQUENCE
        self.record('connection', dev.id, rt.index, at_us=at_us, path='resume' if source == 'INACTIVE' else 'setup',
                    trigger=trigger, units=sequence_weight(sequence), generation=p.generation.value)
        rt.last_known_cell = p.current_cell
        pending = [m for m in mts if m.outcome is None]
        for mt in pending:
            self._resolve(mt, MtOutcome.DELIVERED, done, via=trigger)
        durations = [m.duration_us for m in pending]
        if duration_us is not None:
            durations.append(duration_us)
        if service is None:
            service = max((m.service for m in pending), key=_priority) if pending else ServiceKind.DATA
        self._open_session(dev, rt, service, at_us, done + max(durations, default=0), short)

    def _deliver_on_connection(self, dev: DeviceRuntime, rt: SimRuntime, mts: List[MtRecord]):
        t = self.now + self.delays.nas_us + self.delays.as_us
        pending = [m for m in mts if m.outcome is None]
        if not pending:
            return
        for mt in pending:
            self._resolve(mt, MtOutcome.DELIVERED, t, via='connected')
        end = t + max(m.duration_us for m in pending)
        if rt.session is None:
            self._open_session(dev, rt, max((m.service for m in pending), key=_priority), t, end)
        elif end > rt.session.end_us:
            rt.session.end_us = end
            rt.session.token = next(self._tokens)
            self.queue.push(end, 'session_end', self._on_session_end, dev, rt, rt.session.token)

    def _open_session(self, dev: DeviceRuntime, rt: SimRuntime, service: ServiceKind, start_us: int,
                      end_us: int, short: bool = False):
        token = next(self._tokens)
        rt.session = Session(service, start_us, end_us, token, short=short)
        conflict = dev.arbiter.reserve_both(rt.index, start_us, end_us if short else NEVER, purpose=service.value)
        if conflict is not None:
            logger.warning(f"[Engine] device={dev.id} sim={rt.index} radio conflict with sim "
                           f"{conflict.blocked_by.sim_index} at {start_us}us")
            self.record('radio_conflict', dev.id, rt.index, blocked_by=conflict.blocked_by.sim_index)
        self.record('session_start', dev.id, rt.index, at_us=start_us, service=service.value, short=short)
        self.queue.push(end_us, 'session_end', self._on_session_end, dev, rt, token)
        if not short:
            for strategy in self.strategies:
                strategy.on_connected(self, dev, rt)

    def _on_session_end(self, dev: DeviceRuntime, rt: SimRuntime, token: int):
        if rt.session is None or rt.session.token != token:
            return
        self._touch(dev)
        rt.session = None
        dev.arbiter.release(rt.index, self.now)
        self.record('session_end', dev.id, rt.index)
        if rt.profile.is_connected and rt.ghost_until_us <= self.now:
            self._release_connection(dev, rt)
        self._flush_updates(dev)
        for other in dev.sims:
            if other is not rt and other.return_pending:
                self._return_to(dev, other)

    def _release_connection(self, dev: DeviceRuntime, rt: SimRuntime):
        if rt.network.is_5g:
            rt.manager.transition(rt.profile, RanState.INACTIVE, SUSPEND, self.now)
            self._arm_inactive_timer(dev, rt, self.now)
        else:
            rt.manager.transition(rt.profile, RanState.IDLE, RELEASE, self.now)
        rt.last_known_cell = rt.profile.current_cell

    def _arm_inactive_timer(self, dev: DeviceRuntime, rt: SimRuntime, from_us: int):
        rt.inactive_token += 1
        self.queue.push(from_us + self.inactive_to_idle_us, 'inactive_timeout', self._on_inactive_timeout,
                        dev, rt, rt.inactive_token)

    def _on_inactive_timeout(self, dev: DeviceRuntime, rt: SimRuntime, token: int):
        if token != rt.inactive_token or not rt.profile.is_inactive:
            return
        if rt.paging is not None and not rt.paging.done:
            self._arm_inactive_timer(dev, rt, self.now)
            return
        self._touch(dev)
        rt.manager.transition(rt.profile, RanState.IDLE, INACTIVITY_TIMER, self.now)

    def _flush_updates(self, dev: DeviceRuntime):
        if dev.serving() is not None:
            return
        for rt in dev.sims:
            if rt.profile.pending_update and not rt.profile.is_connected:
                self.flush_update(dev, rt, self.now)

    def _on_mo_start(self, dev: DeviceRuntime, rt: SimRuntime, service: ServiceKind, rate: float):
        self._touch(dev)
        self._schedule_arrival(dev, rt, service, rate, True, self.now)
        p = rt.profile
        if (dev.serving() is not None or p.is_connected or rt.ghost_until_us > self.now
                or dev.tuning_until_us > self.now):
            self.record('mo_blocked', dev.id, rt.index, service=service.value)
            return
        duration = self.scenario.traffic.duration_us(self.stream(dev.id, rt.index, 'mo_duration'), service)
        self.record('mo_start', dev.id, rt.index, service=service.value)
        self._connect_and_deliver(dev, rt, [], self.now, SERVICE_REQUEST, service=service, duration_us=duration)

    # ================================================================== leaving

    def _apply_leave(self, dev: DeviceRuntime, serving: SimRuntime, target: SimRuntime,
                     mts: List[MtRecord]) -> int:
        """Take the device off its serving SIM; returns the time until it listens on target"""
        t = self.now
        sw = dev.device.switch_delay_us
        plan = first_handled(self.strategies, 'on_leave', self, dev, serving, target, mts)
        if plan is None:
            plan = LeavePlan(strategy=None, latency_us=sw)
        session = serving.session
        remaining = max(0, session.end_us - t) if session else 0
        serving.session = None
        dev.arbiter.release(serving.index, t + plan.latency_us - sw)
        if plan.resume_on_return and remaining > 0:
            serving.paused_remaining_us = remaining
            serving.paused_service = session.service
        if plan.release_state is None:
            # the network notices only when the radio link times out
            serving.ghost_until_us = t + self.rlf_us
            self.record('interruption', dev.id, serving.index, duration_us=remaining, reason='radio_link_failure')
            self.queue.push(t + self.rlf_us, 'rlf_timeout', self._on_rlf, dev, serving)
        else:
            trigger = SUSPEND if plan.release_state is RanState.INACTIVE else RELEASE
            serving.manager.transition(serving.profile, plan.release_state, trigger, plan.release_at_us)
            if plan.release_state is RanState.INACTIVE:
                self._arm_inactive_timer(dev, serving, plan.release_at_us)
            serving.last_known_cell = serving.profile.current_cell
            if not plan.resume_on_return:
                self.record('interruption', dev.id, serving.index, strategy=plan.strategy,
                            duration_us=remaining, reason='left')
        serving.away = plan.away
        serving.return_pending = plan.resume_on_return
        if plan.hold_us is not None:
            serving.hold_token += 1
            self.queue.push(t + plan.hold_us, 'hold_expiry', self._on_hold_expiry, dev, serving,
                            serving.hold_token, plan.hold_variant)
        dev.tuning_until_us = t + plan.latency_us
        dev.tuning_to = target.index
        self.record('leave', dev.id, serving.index, strategy=plan.strategy, latency_us=plan.latency_us,
                    target=target.index, release=plan.release_state.value if plan.release_state else None)
        return plan.latency_us

    def _on_rlf(self, dev: DeviceRuntime, serving: SimRuntime):
        if serving.ghost_until_us > self.now or serving.session is not None or not serving.profile.is_connected:
            return
        self._touch(dev)
        serving.ghost_until_us = -1
        serving.manager.transition(serving.profile, RanState.IDLE, RADIO_LINK_FAILURE, self.now)
        self._flush_updates(dev)

    def _return_to(self, dev: DeviceRuntime, rt: SimRuntime):
        if dev.serving() is not None:
            return
        rt.return_pending = False
        rt.away = False
        self.send(MsgKind.ReturnNotice, ue_node(dev.id), rt.network.ran_node, dev.id, rt.index, strategy=5)
        held, rt.held = rt.held, []
        remaining, service = rt.paused_remaining_us, rt.paused_service
        rt.paused_remaining_us = rt.paused_service = None
        if remaining is None and not held:
            return
        self._connect_and_deliver(dev, rt, held, self.now + dev.device.switch_delay_us, SERVICE_REQUEST,
                                  service=service, duration_us=remaining)

    def _on_hold_expiry(self, dev: DeviceRuntime, rt: SimRuntime, token: int, variant: str):
        if token != rt.hold_token:
            return
        self._touch(dev)
        rt.away = False
        held, rt.held = rt.held, []
        if not held:
            return
        self.record('hold_expired', dev.id, rt.index, strategy=6, variant=variant, mt_ids=[m.mt_id for m in held])
        self.start_paging(dev, rt, held, levels=(ScopeLevel.TA_LIST,), max_attempts=1, absence_known=True)

    # ================================================================== notifications over another SIM

    def _on_notification_send(self, dev, target: SimRuntime, carrier: SimRuntime, mts: List[MtRecord],
                              kind: MsgKind, strategy: int, paging_continues: bool):
        self._touch(dev)
        origin = f"{_NOTIFICATION_ORIGIN.get(kind, 'nf')}:{target.network.name}"
        msg = self.send(kind, origin, ue_node(dev.id), dev.id, carrier.index,
                        service=mts[0].service if mts else None, strategy=strategy)
        cp = carrier.profile
        if cp.is_connected and carrier.session is not None:
            self.queue.push(msg.delivered_us, 'notification_arrival', self._on_notification_arrival,
                            dev, target, carrier, mts, strategy, paging_continues, True)
        elif carrier.monitored and not cp.is_connected and cp.cn_state is not CnState.DEREGISTERED:
            at = self._monitor_schedule(carrier).next_at_or_after(msg.delivered_us)
            self.queue.push(at, 'notification_arrival', self._on_notification_arrival,
                            dev, target, carrier, mts, strategy, paging_continues, False)
        else:
            self._notification_lost(dev, target, mts, strategy, paging_continues)

    def _on_notification_arrival(self, dev, target: SimRuntime, carrier: SimRuntime, mts: List[MtRecord],
                                 strategy: int, paging_continues: bool, direct: bool):
        self._touch(dev)
        if not direct:
            # idle carrier: its own network pages the device for the notification
            ran = carrier.profile.is_inactive
            net = carrier.network
            self.send(MsgKind.PageRan if ran else MsgKind.PageCn, net.ran_node if ran else net.core_node,
                      ue_node(dev.id), dev.id, carrier.index, strategy=strategy)
            heard, _ = self._can_hear(dev, carrier, self.now, frozenset({self._cell_of(dev, carrier)}))
            if not heard or carrier.profile.is_connected:
                self._notification_lost(dev, target, mts, strategy, paging_continues)
                return
        pending = [m for m in mts if m.outcome is None]
        if not pending:
            self.record('push_ignored', dev.id, target.index, strategy=strategy, mt_ids=[m.mt_id for m in mts])
            return
        self.record('notification_received', dev.id, target.index, strategy=strategy,
                    mt_ids=[m.mt_id for m in pending], direct=direct)
        self._notified(dev, target, pending, strategy)

    def _notification_lost(self, dev, target: SimRuntime, mts: List[MtRecord], strategy: int,
                           paging_continues: bool):
        self.record('notification_lost', dev.id, target.index, strategy=strategy, mt_ids=[m.mt_id for m in mts])
        if paging_continues and target.paging is not None and not target.paging.done:
            return
        for mt in mts:
            self._resolve(mt, MtOutcome.FAILED, self.now, reason='notification_lost')

    def _notified(self, dev, target: SimRuntime, mts: List[MtRecord], strategy: int):
        t = self.now
        if target.profile.is_connected or target.ghost_until_us > t:
            self._handle_pending_on_target(dev, target, mts)
            return
        serving = dev.serving(exclude=target)
        if serving is None:
            latency = dev.device.switch_delay_us if dev.device.shared_receiver else 0
            self._connect_and_deliver(dev, target, mts, t + latency, SERVICE_REQUEST)
            return
        activity = ACTIVITY_FOR_SERVICE[serving.session.service]
        incoming = max((m.service for m in mts), key=_priority)
        action = match_policy(dev.device.policy, incoming, activity)
        self.record('user_decision', dev.id, target.index, strategy=strategy, action=action.value,
                    activity=activity.value, cause=incoming.value)
        if action is PolicyAction.ACCEPT_LEAVE:
            latency = self._apply_leave(dev, serving, target, mts)
            self._connect_and_deliver(dev, target, mts, t + latency, SERVICE_REQUEST)
            return
        for mt in mts:
            self._resolve(mt, MtOutcome.DECLINED, t, reason='declined_notification')
        if target.paging is not None and not target.paging.done and all(
                m.outcome is not None for m in target.paging_mts):
            target.paging.cancel(responded=False)
            target.paging.outcome.absence_known = True
            self.record('paging_outcome', dev.id, target.index, mt_ids=[m.mt_id for m in target.paging_mts],
                        cancelled=True, **target.paging.outcome.to_dict())
            target.paging = None
            target.paging_mts = []

    def _handle_pending_on_target(self, dev, target: SimRuntime, mts: List[MtRecord]):
        if target.ghost_until_us > self.now:
            for mt in mts:
                self._resolve(mt, MtOutcome.DISCARDED, self.now, reason='radio_link_lost')
        else:
            self._deliver_on_connection(dev, target, mts)

    # ================================================================== end of run

    def _finalize(self, end_us: int):
        # outcomes decided before the horizon are still written; everything else is dropped
        while self.queue:
            event = self.queue.pop()
            if event.kind == 'mt_outcome':
                event.handler(*event.args)
        for dev in self.devices:
            self._touch(dev)
        for mt in self.mts:
            if mt.outcome is None:
                self._resolve(mt, MtOutcome.FAILED, end_us, reason='unresolved_at_end')
        for dev in self.devices:
            for r in dev.arbiter.finalize(end_us):
                self.record('rx_grant' if r.resource is Resource.RX else 'tx_grant', dev.id, r.sim_index,
                            at_us=r.start_us, start_us=r.start_us, end_us=r.end_us, purpose=r.purpose)
        self.record('run_end', at_us=end_us, duration_us=end_us, devices=len(self.devices), mt_arrivals=len(self.mts))


def run(scenario, seed: Optional[int] = None) -> RunResult:
    """Run one replication of a validated scenario"""
    return SimulationEngine(scenario, seed).run()
