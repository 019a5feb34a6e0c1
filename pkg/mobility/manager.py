"""
Mobility manager - registration, RRC/MM transitions and TA/RNA tracking for one network
"""
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple
import logging

import numpy as np

from domain.errors import IllegalTransitionError
from domain.identity import regenerate_temporal_ids
from domain.types import (
    PAGED_SETUP_SEQUENCE, RESUME_SEQUENCE, SETUP_SEQUENCE,
    CnState, Generation, LinkDelays, MsgKind, RanState, SimMessage, SimProfile,
    make_message, ue_node,
)
from .topology import NetworkModel

logger = logging.getLogger(__name__)

# Triggers understood by transition()
PAGING_RESPONSE = 'paging_response'
SERVICE_REQUEST = 'service_request'
RELEASE = 'release'
SUSPEND = 'suspend'
RADIO_LINK_FAILURE = 'rlf'
INACTIVITY_TIMER = 'inactivity_timer'
RAN_PAGING_FAILURE = 'ran_paging_failure'


@dataclass
class RegistrationOutcome:
    sim_index: int
    cell: int
    current_ta: int
    ta_list: frozenset
    messages: List[SimMessage] = field(default_factory=list)


class MobilityManager:
    """
    Per-network mobility handling for the SIMs of one device

    All messages go through `emit` (the engine's event log); without a callback
    they are collected in `outbox`.
    """

    def __init__(self, network: NetworkModel, delays: LinkDelays, device_id: int,
                 emit: Optional[Callable[[SimMessage], None]] = None):
        self.network = network
        self.delays = delays
        self.device_id = device_id
        self.outbox: List[SimMessage] = []
        self._emit = emit or self.outbox.append
        self.last_transition_done_us = 0

    def _send(self, kind: MsgKind, uplink: bool, sim: SimProfile, now_us: int,
              towards_core: bool = False, strategy: Optional[int] = None) -> SimMessage:
        ue = ue_node(self.device_id)
        far = self.network.core_node if towards_core else self.network.ran_node
        origin, destination = (ue, far) if uplink else (far, ue)
        msg = make_message(kind, origin, destination, self.device_id, sim.sim_index, now_us,
                           self.delays, strategy=strategy)
        self._emit(msg)
        return msg

    def _chain(self, kinds, sim: SimProfile, now_us: int) -> int:
        """Send a message sequence back to back; returns completion time"""
        t = now_us
        for kind in kinds:
            uplink = kind in (MsgKind.RandomAccess, MsgKind.ServiceRequest, MsgKind.PagingResponse,
                              MsgKind.RrcResumeComplete)
            core = kind in (MsgKind.ServiceRequest, MsgKind.PagingResponse, MsgKind.InitialContextSetup)
            t = self._send(kind, uplink, sim, t, towards_core=core).delivered_us
        return t

    # ------------------------------------------------------------------ registration

    def register(self, sim: SimProfile, cell: int, now_us: int, rng: np.random.Generator) -> RegistrationOutcome:
        """
        Attach a SIM to this network

        Args:
            sim: SIM profile in DEREGISTERED state
            cell: Cell the device camps on
            now_us: Simulation time
            rng: The SIM's identity stream (temporal ids are allocated here)

        Returns:
            RegistrationOutcome with the assigned TA list and sent messages
        """
        if sim.cn_state is not CnState.DEREGISTERED:
            raise IllegalTransitionError(sim.sim_index, sim.state_name, 'IDLE', 'already registered')
        topo = self.network.topology
        sent = []
        request = self._send(MsgKind.RegistrationRequest, True, sim, now_us, towards_core=True)
        accept = self._send(MsgKind.RegistrationAccept, False, sim, request.delivered_us, towards_core=True)
        sent += [request, accept]

        sim.identity = regenerate_temporal_ids(sim.identity, rng)
        sim.current_cell = cell
        sim.current_ta = topo.ta_of(cell)
        sim.ta_list = set(topo.ta_list_around(sim.current_ta))
        sim.cn_state = CnState.IDLE
        sim.ran_state = RanState.IDLE
        sim.pending_update = False
        sim.check_states()
        logger.debug(f"[Mobility] device={self.device_id} sim={sim.sim_index} registered on "
                     f"{self.network.name} TA={sim.current_ta} list={sorted(sim.ta_list)}")
        return RegistrationOutcome(sim.sim_index, cell, sim.current_ta, frozenset(sim.ta_list), sent)

    # ------------------------------------------------------------------ mobility

    def _update_kind(self) -> MsgKind:
        return MsgKind.RauRequest if self.network.generation is Generation.G5 else MsgKind.TauRequest

    def on_move(self, sim: SimProfile, new_cell: int, now_us: int, tx_free: bool = True) -> Optional[SimMessage]:
        """
        Camp on a new cell and send a location update when the TA list (or RNA) is left

        Args:
            sim: Registered SIM
            new_cell: Cell the device moved to
            now_us: Simulation time
            tx_free: False while the transmitter serves another SIM; the update is then queued

        Returns:
            The TauRequest / RauRequest / RnaUpdate sent, or None
        """
        if sim.cn_state is CnState.DEREGISTERED:
            raise IllegalTransitionError(sim.sim_index, 'DEREGISTERED', 'MOVE', 'not registered')
        topo = self.network.topology
        new_ta = topo.ta_of(new_cell)
        sim.current_cell = new_cell

        if sim.ran_state is RanState.INACTIVE:
            in_rna = new_cell in topo.rna_cells(sim.rna_ta)
            if in_rna and new_ta in sim.ta_list:
                sim.current_ta = new_ta
                sim.pending_update = False
                return None
            if not tx_free:
                # current_ta stays on the last registered TA until the update goes out
                sim.pending_update = True
                return None
            if in_rna:
                # still reachable by the RAN, but the core's TA list was left
                return self._send_update(sim, new_ta, now_us)
            msg = self._send(MsgKind.RnaUpdate, True, sim, now_us)
            sim.rna_ta = new_ta
            if new_ta not in sim.ta_list:
                sim.ta_list = set(topo.ta_list_around(new_ta))
            sim.current_ta = new_ta
            sim.pending_update = False
            return msg

        if new_ta in sim.ta_list:
            sim.current_ta = new_ta
            sim.pending_update = False
            return None

        if sim.ran_state is RanState.CONNECTED or not tx_free:
            # connected moves are tracked by the RAN; the area update follows the release
            sim.pending_update = True
            return None
        return self._send_update(sim, new_ta, now_us)

    def _send_update(self, sim: SimProfile, new_ta: int, now_us: int) -> SimMessage:
        msg = self._send(self._update_kind(), True, sim, now_us, towards_core=True)
        sim.ta_list = set(self.network.topology.ta_list_around(new_ta))
        sim.current_ta = new_ta
        sim.pending_update = False
        logger.debug(f"[Mobility] device={self.device_id} sim={sim.sim_index} {msg.kind.value} -> TA {new_ta}")
        return msg

    def flush_pending(self, sim: SimProfile, now_us: int) -> Optional[SimMessage]:
        """Send a queued location update once the transmitter is free again"""
        if not sim.pending_update or sim.ran_state is RanState.CONNECTED:
            return None
        new_ta = self.network.topology.ta_of(sim.current_cell)
        if sim.ran_state is RanState.INACTIVE:
            return self.on_move(sim, sim.current_cell, now_us, tx_free=True)
        if new_ta in sim.ta_list:
            sim.current_ta = new_ta
            sim.pending_update = False
            return None
        return self._send_update(sim, new_ta, now_us)

    # ------------------------------------------------------------------ state machine

    def transition(self, sim: SimProfile, target: RanState, trigger: str, now_us: int) -> SimProfile:
        """
        Move a SIM along the RRC/MM state diagram

        IDLE <-> CONNECTED in both generations; CONNECTED -> INACTIVE, INACTIVE -> CONNECTED
        and INACTIVE -> IDLE in 5G only.

        Raises:
            IllegalTransitionError: transition not in the diagram
        """
        source = sim.state_name
        finished_us = now_us
        is_5g = self.network.generation is Generation.G5

        if target is RanState.INACTIVE and not is_5g:
            raise IllegalTransitionError(sim.sim_index, source, 'INACTIVE', 'INACTIVE exists only in 5G')

        if target is RanState.CONNECTED:
            if source == 'IDLE':
                sequence = PAGED_SETUP_SEQUENCE if trigger == PAGING_RESPONSE else SETUP_SEQUENCE
            elif source == 'INACTIVE':
                sequence = RESUME_SEQUENCE
            else:
                raise IllegalTransitionError(sim.sim_index, source, 'CONNECTED')
            finished_us = self._chain(sequence, sim, now_us)
            sim.cn_state = CnState.CONNECTED
            sim.ran_state = RanState.CONNECTED
            sim.rna_ta = None

        elif target is RanState.INACTIVE:
            if source != 'CONNECTED':
                raise IllegalTransitionError(sim.sim_index, source, 'INACTIVE')
            finished_us = self._send(MsgKind.RrcSuspend, False, sim, now_us).delivered_us
            sim.ran_state = RanState.INACTIVE
            sim.rna_ta = sim.current_ta

        elif target is RanState.IDLE:
            if source == 'CONNECTED':
                if trigger != RADIO_LINK_FAILURE:
                    finished_us = self._send(MsgKind.RrcRelease, False, sim, now_us).delivered_us
            elif source == 'INACTIVE':
                if trigger not in (RADIO_LINK_FAILURE, RAN_PAGING_FAILURE):
                    finished_us = self._send(MsgKind.RrcRelease, False, sim, now_us).delivered_us
            else:
                raise IllegalTransitionError(sim.sim_index, source, 'IDLE')
            sim.cn_state = CnState.IDLE
            sim.ran_state = RanState.IDLE
            sim.rna_ta = None
        else:
            raise IllegalTransitionError(sim.sim_index, source, str(target))

        sim.check_states()
        self.last_transition_done_us = finished_us
        logger.debug(f"[Mobility] device={self.device_id} sim={sim.sim_index} {source} -> {sim.state_name} ({trigger})")
        return sim

    def connection_delay_us(self, source: str, trigger: str = SERVICE_REQUEST) -> int:
        """Time to reach CONNECTED from IDLE (setup) or INACTIVE (resume)"""
        if source == 'INACTIVE':
            return self.delays.sequence_us(RESUME_SEQUENCE)
        sequence = PAGED_SETUP_SEQUENCE if trigger == PAGING_RESPONSE else SETUP_SEQUENCE
        return self.delays.sequence_us(sequence)


def next_move(rng: np.random.Generator, position: int, positions: int, dwell_mean_us: int) -> Tuple[int, int]:
    """One step of the mobility walk: (dwell before moving, new position on the ring)"""
    dwell = max(1, int(rng.exponential(dwell_mean_us)))
    step = 1 if rng.random() < 0.5 else -1
    return dwell, (position + step) % positions


@dataclass
class MobilityTrace:
    """Piecewise-constant position of one device: (time, position) at every change"""
    device_id: int
    steps: List[Tuple[int, int]] = field(default_factory=list)

    def cells(self, network: NetworkModel, positions: int) -> List[Tuple[int, int]]:
        """(time, cell) of this trace on one network"""
        return [(t, network.topology.cell_at(p, positions)) for t, p in self.steps]


def markov_walk(rng: np.random.Generator, device_id: int, positions: int, dwell_mean_us: int,
                horizon_us: int, start: int = 0) -> MobilityTrace:
    """Seeded random walk over the position ring until the horizon"""
    trace = MobilityTrace(device_id, [(0, start)])
    t, pos = 0, start
    while True:
        dwell, pos = next_move(rng, pos, positions, dwell_mean_us)
        t += dwell
        if t >= horizon_us:
            return trace
        trace.steps.append((t, pos))
