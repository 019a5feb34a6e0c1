#!/usr/bin/env python3
"""
Paging tests - occasions, collision detection and CN/RAN paging procedures
"""
import sys
import logging
import math
sys.path.insert(0, '.')

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from domain.errors import PagingFailedError, RanPagingFailedError
from domain.types import Generation, LinkDelays, RanState, SimProfile, UeIdentity
from mobility.manager import SERVICE_REQUEST, SUSPEND, MobilityManager
from mobility.topology import NetworkModel
from paging.collision import detect_collision, detect_collision_schedules
from paging.engine import (
    MissReason, PagingProcedure, PagingStatus, cn_scope_cells, run_cn_paging, run_ran_paging, sim_schedule,
)
from paging.occasions import PagingConfig, PagingOccasion, PagingSchedule, ScopeLevel, compute_occasion

logger = logging.getLogger(__name__)

CFG = PagingConfig()  # T=32 frames, 4 occasions, 10 ms frames


def _registered(generation=Generation.G5):
    net = NetworkModel('opA', 1, generation)
    manager = MobilityManager(net, LinkDelays(), device_id=0)
    sim = SimProfile(sim_index=0, plmn_id=1, generation=generation, identity=UeIdentity(imsi=123456789012345))
    manager.register(sim, cell=0, now_us=0, rng=np.random.default_rng(7))
    return net, manager, sim


def _never(reason):
    return lambda t, scope: (False, reason)


def test_compute_occasion():
    occ = compute_occasion(100, CFG, plmn_id=2)
    assert (occ.pf, occ.po, occ.plmn_id) == (4, 3, 2)


def test_ran_and_cn_timing_use_their_own_temporary_ids():
    net = NetworkModel('opA', 1, Generation.G5)
    sim = SimProfile(sim_index=0, plmn_id=1, generation=Generation.G5,
                     identity=UeIdentity(imsi=5, temporal_cn_id=0, temporal_ran_id=97))
    cn, ran = sim_schedule(sim, net).occasion, sim_schedule(sim, net, ran=True).occasion
    assert (cn.pf, cn.po) == (0, 0)
    assert (ran.pf, ran.po) == (1, 3)

    # a proposed alternative id moves RAN timing at once and CN timing only once confirmed
    sim.alt_ue_id = 100
    ran = sim_schedule(sim, net, ran=True).occasion
    assert (ran.pf, ran.po) == (4, 3)
    assert sim_schedule(sim, net).occasion.pf == 0
    sim.alt_ue_id_confirmed = True
    assert sim_schedule(sim, net).occasion.pf == 4

    lte = SimProfile(sim_index=1, plmn_id=1, generation=Generation.G4,
                     identity=UeIdentity(imsi=5, temporal_cn_id=0, temporal_ran_id=97))
    assert sim_schedule(lte, NetworkModel('opB', 1, Generation.G4)).occasion.pf == 5


@given(st.integers(min_value=0, max_value=2 ** 48),
       st.sampled_from([1, 2, 4, 8, 16, 32, 64, 128]),
       st.sampled_from([1, 2, 4]))
def test_occasion_in_range(ue_id, drx, ns):
    occ = compute_occasion(ue_id, PagingConfig(drx_cycle=drx, occasions_per_frame=ns))
    assert 0 <= occ.pf < drx
    assert 0 <= occ.po < ns


def test_schedule_wall_times():
    schedule = PagingSchedule(compute_occasion(100, CFG), CFG)
    assert schedule.base_us == 47_500
    assert schedule.period_us == 320_000
    times = schedule.times(1_000_000)
    assert times.tolist() == [47_500, 367_500, 687_500]
    assert schedule.next_at_or_after(47_501) == 367_500
    assert schedule.count_between(0, 960_000) == 3
    assert schedule.count_between(500, 500) == 0


def test_frame_offset_and_shift_move_the_schedule():
    offset = PagingConfig(frame_offset_us=3_000)
    shifted = PagingSchedule(PagingOccasion(0, 0), offset, shift_us=2_500)
    assert shifted.base_us == 5_500


def test_identical_occasions_collide_systematically():
    occ = PagingOccasion(4, 0)
    report = detect_collision(occ, CFG, occ, CFG)
    assert report.systematic
    assert report.fraction_colliding == 1.0


def test_two_receivers_never_collide():
    occ = PagingOccasion(4, 0)
    report = detect_collision(occ, CFG, occ, CFG, num_rx=2)
    assert report.collisions == 0
    assert not report.systematic


def test_distinct_frames_do_not_collide():
    report = detect_collision(PagingOccasion(4, 0), CFG, PagingOccasion(5, 0), CFG)
    assert report.collisions == 0


def test_mixed_cycles_collide_partially():
    longer = PagingConfig(drx_cycle=64)
    report = detect_collision(PagingOccasion(4, 0), CFG, PagingOccasion(4, 0), longer)
    assert report.occurrences == 2
    assert report.collisions == 1
    assert report.fraction_colliding == 0.5
    assert not report.systematic


def _brute_force_collisions(a, b):
    """Walk one hyper-period of a and test every nearby window of b directly"""
    period = math.lcm(a.period_us, b.period_us)
    hits = 0
    for ta in range(a.base_us, a.base_us + period, a.period_us):
        k_lo = (ta - b.window_us - b.base_us) // b.period_us - 1
        k_hi = (ta + a.window_us - b.base_us) // b.period_us + 1
        if any(b.base_us + k * b.period_us < ta + a.window_us and b.base_us + k * b.period_us + b.window_us > ta
               for k in range(k_lo, k_hi + 1)):
            hits += 1
    return hits, period // a.period_us


_schedules = st.builds(
    lambda drx, ns, pf, po, offset, shift: PagingSchedule(
        PagingOccasion(pf % drx, po % ns), PagingConfig(drx_cycle=drx, occasions_per_frame=ns, frame_offset_us=offset),
        shift),
    st.sampled_from([1, 2, 4, 8, 16, 32]), st.sampled_from([1, 2, 4]),
    st.integers(0, 31), st.integers(0, 3), st.integers(0, 9_999), st.integers(0, 5_000),
)


@settings(max_examples=300)
@given(_schedules, _schedules)
def test_collision_detection_matches_enumeration(a, b):
    report = detect_collision_schedules(a, b)
    collisions, occurrences = _brute_force_collisions(a, b)
    assert report.occurrences == occurrences
    assert report.collisions == collisions
    assert report.systematic == (collisions == occurrences)


def test_listen_window_must_be_positive():
    with pytest.raises(ValueError):
        detect_collision(PagingOccasion(0, 0), CFG, PagingOccasion(0, 0), CFG, listen_window_us=0)


def test_cn_paging_answered_at_first_occasion():
    net, _, sim = _registered()
    outcome = run_cn_paging(net, sim)
    assert outcome.responded
    assert outcome.attempts_used == 1
    assert outcome.cells_paged == 1
    assert outcome.wasted_units == 0
    assert not outcome.escalated


def test_cn_paging_escalates_and_fails():
    net, _, sim = _registered()
    outcome = run_cn_paging(net, sim, can_hear=_never(MissReason.RX_BUSY))
    assert outcome.failed
    assert outcome.escalated
    assert outcome.attempts_used == 9
    # last cell, TA list {7, 0, 1}, both registration areas
    assert outcome.cells_paged == 3 * 1 + 3 * 12 + 3 * 32
    assert outcome.wasted_units == outcome.cells_paged
    assert outcome.misleading
    assert [a.level for a in outcome.attempts[::3]] == [
        ScopeLevel.LAST_CELL, ScopeLevel.TA_LIST, ScopeLevel.FULL_REGISTRATION_AREA]


def test_real_mobility_failure_is_not_misleading():
    net, _, sim = _registered()
    outcome = run_cn_paging(net, sim, can_hear=_never(MissReason.MOVED))
    assert outcome.failed
    assert not outcome.misleading


def test_absence_known_is_not_misleading():
    net, _, sim = _registered()
    outcome = run_cn_paging(net, sim, can_hear=_never(MissReason.ABSENT))
    outcome.absence_known = True
    assert not outcome.misleading


def test_cn_paging_can_raise():
    net, _, sim = _registered()
    with pytest.raises(PagingFailedError):
        run_cn_paging(net, sim, can_hear=_never(MissReason.COLLISION), raise_on_failure=True)


def test_ran_paging_stays_in_rna_and_discards_buffer():
    net, manager, sim = _registered()
    manager.transition(sim, RanState.CONNECTED, SERVICE_REQUEST, 0)
    manager.transition(sim, RanState.INACTIVE, SUSPEND, 100_000)
    outcome = run_ran_paging(net, sim, can_hear=_never(MissReason.RX_BUSY))
    assert outcome.ran
    assert outcome.failed
    assert not outcome.escalated
    assert outcome.attempts_used == 3
    assert outcome.cells_paged == 3 * 4
    assert outcome.buffer_discarded
    with pytest.raises(RanPagingFailedError):
        run_ran_paging(net, sim, can_hear=_never(MissReason.RX_BUSY), raise_on_failure=True)


def test_ran_paging_needs_5g_inactive():
    net, _, sim = _registered()
    with pytest.raises(ValueError):
        run_ran_paging(net, sim)
    net4, _, sim4 = _registered(Generation.G4)
    with pytest.raises(ValueError):
        run_ran_paging(net4, sim4)


def test_consecutive_retry_after_collision():
    schedule = PagingSchedule(PagingOccasion(0, 0), CFG)
    proc = PagingProcedure(schedule, (ScopeLevel.LAST_CELL,), lambda level: frozenset({0}),
                           max_attempts=3, retry_interval_us=1_280_000, consecutive_retry=True)
    t0 = proc.first_attempt_at(0)
    t1 = proc.record(t0, answered=False, reason=MissReason.COLLISION)
    assert t1 == t0 + schedule.window_us
    assert proc.next_is_consecutive
    t2 = proc.record(t1, answered=True)
    assert t2 is None
    assert proc.status is PagingStatus.RESPONDED
    assert proc.outcome.attempts[1].consecutive


def test_busy_reply_ends_paging():
    schedule = PagingSchedule(PagingOccasion(0, 0), CFG)
    proc = PagingProcedure(schedule, (ScopeLevel.LAST_CELL,), lambda level: frozenset({0}),
                           max_attempts=3, retry_interval_us=1_280_000)
    assert proc.record(0, answered=True, busy=True) is None
    assert proc.outcome.busy
    assert not proc.outcome.failed
    with pytest.raises(RuntimeError):
        proc.record(10, answered=True)


def test_cancel_marks_answered_elsewhere():
    schedule = PagingSchedule(PagingOccasion(0, 0), CFG)
    proc = PagingProcedure(schedule, (ScopeLevel.LAST_CELL,), lambda level: frozenset({0}),
                           max_attempts=3, retry_interval_us=1_280_000)
    proc.cancel()
    assert proc.done
    assert proc.outcome.responded


if __name__ == '__main__':
    sys.exit(pytest.main([__file__, '-v']))
