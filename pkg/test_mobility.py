#!/usr/bin/env python3
"""
Mobility tests - topology, registration, RRC/MM transitions and location updates
"""
import sys
import logging
sys.path.insert(0, '.')

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from domain.errors import IllegalTransitionError
from domain.types import CnState, Generation, LinkDelays, MsgKind, RanState, SimProfile, UeIdentity
from mobility.manager import (
    INACTIVITY_TIMER, PAGING_RESPONSE, RADIO_LINK_FAILURE, RELEASE, SERVICE_REQUEST, SUSPEND,
    MobilityManager, markov_walk,
)
from mobility.topology import NetworkModel, TopologyModel
from paging.engine import cn_scope_cells
from paging.occasions import ScopeLevel

logger = logging.getLogger(__name__)


def _setup(generation=Generation.G5, cell=0, topology=None):
    net = NetworkModel('opA', 1, generation, topology=topology or TopologyModel())
    manager = MobilityManager(net, LinkDelays(), device_id=3)
    sim = SimProfile(sim_index=0, plmn_id=1, generation=generation, identity=UeIdentity(imsi=123456789012345))
    manager.register(sim, cell=cell, now_us=0, rng=np.random.default_rng(1))
    return net, manager, sim


def test_topology_shapes():
    topo = TopologyModel()
    assert topo.num_cells == 32
    assert topo.ta_of(5) == 1
    assert topo.ta_list_around(0) == frozenset({7, 0, 1})
    assert topo.rna_cells(0) == frozenset({0, 1, 2, 3})
    assert topo.registration_area_cells({0}, Generation.G4) == frozenset(range(32))
    assert topo.registration_area_cells({0}, Generation.G5) == frozenset(range(16))


@given(st.integers(min_value=0, max_value=7), st.integers(min_value=0, max_value=3))
def test_rna_inside_ta_list(ta, radius):
    topo = TopologyModel(ta_list_radius=radius, rna_radius=min(radius, 1))
    assert topo.rna_cells(ta) <= topo.cells_of_tas(topo.ta_list_around(ta))


def test_topology_validation():
    assert TopologyModel(rna_radius=2, ta_list_radius=1).validate(Generation.G5)
    assert TopologyModel(rna_radius=2, ta_list_radius=1).validate(Generation.G4) == []
    assert TopologyModel(num_tas=0).validate(Generation.G4)


def test_cell_mapping_covers_each_network():
    topo = TopologyModel(num_tas=4, cells_per_ta=2)
    cells = {topo.cell_at(p, 32) for p in range(32)}
    assert cells == set(range(8))


def test_register_assigns_ta_list():
    _, manager, sim = _setup(cell=9)
    assert sim.cn_state is CnState.IDLE
    assert sim.current_ta == 2
    assert sim.ta_list == {1, 2, 3}
    kinds = [m.kind for m in manager.outbox]
    assert kinds == [MsgKind.RegistrationRequest, MsgKind.RegistrationAccept]
    with pytest.raises(IllegalTransitionError):
        manager.register(sim, cell=0, now_us=10, rng=np.random.default_rng(1))


def test_setup_and_release():
    _, manager, sim = _setup()
    manager.outbox.clear()
    manager.transition(sim, RanState.CONNECTED, SERVICE_REQUEST, 1_000)
    assert sim.state_name == 'CONNECTED'
    assert [m.kind for m in manager.outbox] == [
        MsgKind.RandomAccess, MsgKind.RrcSetup, MsgKind.ServiceRequest, MsgKind.InitialContextSetup]
    assert manager.last_transition_done_us == 1_000 + 2 * 2_000 + 2 * 10_000
    manager.transition(sim, RanState.IDLE, RELEASE, 50_000)
    assert sim.state_name == 'IDLE'
    assert manager.outbox[-1].kind is MsgKind.RrcRelease


def test_paged_setup_uses_paging_response():
    _, manager, sim = _setup()
    manager.outbox.clear()
    manager.transition(sim, RanState.CONNECTED, PAGING_RESPONSE, 0)
    assert MsgKind.PagingResponse in [m.kind for m in manager.outbox]


def test_inactive_resume_in_5g():
    _, manager, sim = _setup()
    manager.transition(sim, RanState.CONNECTED, SERVICE_REQUEST, 0)
    manager.transition(sim, RanState.INACTIVE, SUSPEND, 100_000)
    assert sim.state_name == 'INACTIVE'
    assert sim.rna_ta == sim.current_ta
    manager.outbox.clear()
    manager.transition(sim, RanState.CONNECTED, SERVICE_REQUEST, 200_000)
    assert [m.kind for m in manager.outbox] == [MsgKind.RandomAccess, MsgKind.RrcResume, MsgKind.RrcResumeComplete]
    assert manager.connection_delay_us('INACTIVE') < manager.connection_delay_us('IDLE')


def test_inactive_timer_and_rlf_are_silent():
    _, manager, sim = _setup()
    manager.transition(sim, RanState.CONNECTED, SERVICE_REQUEST, 0)
    manager.transition(sim, RanState.INACTIVE, SUSPEND, 100_000)
    manager.outbox.clear()
    manager.transition(sim, RanState.IDLE, INACTIVITY_TIMER, 200_000)
    assert sim.state_name == 'IDLE'
    assert [m.kind for m in manager.outbox] == [MsgKind.RrcRelease]
    manager.transition(sim, RanState.CONNECTED, SERVICE_REQUEST, 300_000)
    manager.outbox.clear()
    manager.transition(sim, RanState.IDLE, RADIO_LINK_FAILURE, 400_000)
    assert manager.outbox == []


def test_illegal_transitions():
    _, manager, sim = _setup(Generation.G4)
    manager.transition(sim, RanState.CONNECTED, SERVICE_REQUEST, 0)
    with pytest.raises(IllegalTransitionError):
        manager.transition(sim, RanState.INACTIVE, SUSPEND, 10)
    _, manager5, sim5 = _setup()
    with pytest.raises(IllegalTransitionError):
        manager5.transition(sim5, RanState.INACTIVE, SUSPEND, 10)
    with pytest.raises(IllegalTransitionError):
        manager5.transition(sim5, RanState.IDLE, RELEASE, 10)


def test_move_inside_ta_list_is_silent():
    _, manager, sim = _setup()
    assert manager.on_move(sim, 4, 1_000) is None
    assert sim.current_ta == 1


@pytest.mark.parametrize('generation,kind', [
    (Generation.G5, MsgKind.RauRequest),
    (Generation.G4, MsgKind.TauRequest),
])
def test_leaving_ta_list_sends_update(generation, kind):
    _, manager, sim = _setup(generation)
    msg = manager.on_move(sim, 8, 1_000)
    assert msg.kind is kind
    assert sim.ta_list == {1, 2, 3}
    assert sim.current_ta == 2


def test_busy_transmitter_defers_update():
    _, manager, sim = _setup()
    assert manager.on_move(sim, 8, 1_000, tx_free=False) is None
    assert sim.pending_update
    sim.check_states()
    msg = manager.flush_pending(sim, 5_000)
    assert msg.kind is MsgKind.RauRequest
    assert not sim.pending_update


def test_inactive_move_outside_rna_sends_rna_update():
    _, manager, sim = _setup()
    manager.transition(sim, RanState.CONNECTED, SERVICE_REQUEST, 0)
    manager.transition(sim, RanState.INACTIVE, SUSPEND, 100_000)
    assert manager.on_move(sim, 2, 150_000) is None
    msg = manager.on_move(sim, 4, 200_000)
    assert msg.kind is MsgKind.RnaUpdate
    assert sim.rna_ta == 1


def test_inactive_move_leaving_ta_list_inside_rna():
    _, manager, sim = _setup(topology=TopologyModel(rna_radius=1))
    assert manager.on_move(sim, 4, 1_000) is None
    manager.transition(sim, RanState.CONNECTED, SERVICE_REQUEST, 10_000)
    manager.transition(sim, RanState.INACTIVE, SUSPEND, 100_000)
    assert sim.rna_ta == 1

    assert manager.on_move(sim, 0, 150_000) is None
    assert sim.current_ta == 0

    # TA 2 is outside the list {7, 0, 1} but inside the RNA around TA 1; deferred while busy
    assert manager.on_move(sim, 8, 180_000, tx_free=False) is None
    assert sim.pending_update
    assert sim.current_ta == 0
    sim.check_states()

    msg = manager.flush_pending(sim, 200_000)
    assert msg.kind is MsgKind.RauRequest
    assert sim.current_ta == 2
    assert sim.ta_list == {1, 2, 3}
    assert sim.rna_ta == 1
    assert not sim.pending_update
    sim.check_states()
    assert 8 in cn_scope_cells(manager.network, sim, ScopeLevel.RNA, last_cell=8)


@settings(max_examples=25)
@given(st.integers(min_value=0, max_value=10_000))
def test_markov_walk_is_seeded(seed):
    a = markov_walk(np.random.default_rng(seed), 0, 16, 5_000_000, 60_000_000)
    b = markov_walk(np.random.default_rng(seed), 0, 16, 5_000_000, 60_000_000)
    assert a.steps == b.steps
    times = [t for t, _ in a.steps]
    assert times == sorted(times)
    assert all(0 <= p < 16 for _, p in a.steps)
    for (_, p), (_, q) in zip(a.steps, a.steps[1:]):
        assert (q - p) % 16 in (1, 15)


if __name__ == '__main__':
    sys.exit(pytest.main([__file__, '-v']))
