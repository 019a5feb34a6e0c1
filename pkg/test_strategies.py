#!/usr/bin/env python3
"""
Strategy tests - catalog, applicability matrix, stack validation and offset search
"""
import sys
import logging
from types import SimpleNamespace
sys.path.insert(0, '.')

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from domain.errors import NoFeasibleOffsetError, NotApplicableError
from domain.types import Generation, ServiceKind, SimProfile, UeIdentity
from metrics.axes import stack_complexity
from paging.collision import detect_collision_schedules
from paging.occasions import PagingConfig, PagingOccasion, PagingSchedule
from strategies.catalog import (
    CATALOG, CN_BASED, RAN_BASED, StrategyGroup, StrategyParams, StrategyStack, applicability, descriptor,
)
from strategies.collision import assign_paging_offsets, first_fit_shift, propose_alt_id, revoke_alt_id
from strategies.general import PagingCause
from strategies.notification import SmsNotification
from strategies.registry import STRATEGY_CLASSES, build_strategies

logger = logging.getLogger(__name__)

G4, G5 = Generation.G4, Generation.G5

FIVE_G_ONLY = {3, 7, 8, 11, 12}
NOT_RAN_BASED = {6, 8, 9, 10, 11, 12}
NOT_CN_BASED = {2}


def test_catalog_has_fourteen_strategies():
    assert sorted(CATALOG) == list(range(1, 15))
    assert set(STRATEGY_CLASSES) == set(CATALOG)
    groups = {sid: d.group for sid, d in CATALOG.items()}
    assert [s for s, g in groups.items() if g is StrategyGroup.SINGLE_RXTX_NOTIFY] == [8, 9, 10]
    assert [s for s, g in groups.items() if g is StrategyGroup.COLLISION_AVOIDANCE] == [11, 12, 13, 14]


@pytest.mark.parametrize('sid', range(1, 15))
def test_applicability_matrix(sid):
    assert applicability(sid, [G5])
    assert applicability(sid, [G5, G4])
    assert applicability(sid, [G4]) == (sid not in FIVE_G_ONLY)
    assert applicability(sid, [G5], RAN_BASED) == (sid not in NOT_RAN_BASED)
    assert applicability(sid, [G5], CN_BASED) == (sid not in NOT_CN_BASED)


def test_unknown_strategy():
    assert not applicability(15, [G5])
    with pytest.raises(NotApplicableError):
        descriptor(0)
    with pytest.raises(NotApplicableError):
        build_strategies(StrategyStack((15,)))


def test_complexity_is_static():
    assert descriptor(1).complexity == 3
    assert descriptor(2).complexity == 3
    assert descriptor(7).complexity == 6
    assert stack_complexity([13, 7, 2]) == pytest.approx(13 / 3)
    assert stack_complexity([11, 8]) == pytest.approx(3.5)
    assert stack_complexity([]) == 0.0


def test_stack_validation():
    assert StrategyStack((1, 2, 13)).validate([G5, G5]) == []
    errors = StrategyStack((11, 13)).validate([G5, G5])
    assert any('11, 12, 13' in e for e in errors)
    assert StrategyStack((2, 2)).validate([G5])
    assert StrategyStack((3,)).validate([G4, G4])
    assert StrategyStack((9,)).validate([G5], n3iwf_registered=False)
    assert StrategyStack((8,)).validate([G5], inter_operator_link=False)
    assert StrategyStack((1,), StrategyParams(s07_grant_probability=2.0)).validate([G5])


def test_composition_order():
    stack = StrategyStack((2, 13, 8, 1))
    assert stack.ordered() == [13, 8, 2, 1]
    assert [s.strategy_id for s in build_strategies(stack)] == [13, 8, 2, 1]
    assert stack.label == '2+13+8+1'
    assert StrategyStack().label == 'baseline'


def test_params_reject_unknown_keys():
    assert StrategyParams.from_dict({'s06_hold_ms': 100}).s06_hold_ms == 100
    with pytest.raises(ValueError):
        StrategyParams.from_dict({'no_such_param': 1})


def test_paging_cause_picks_highest_priority():
    plugin = PagingCause(StrategyParams())
    mts = [SimpleNamespace(service=ServiceKind.DATA), SimpleNamespace(service=ServiceKind.VOICE)]
    assert plugin.paging_cause(None, None, None, mts) is ServiceKind.VOICE
    assert plugin.paging_cause(None, None, None, []) is None


@settings(max_examples=50)
@given(st.integers(min_value=0, max_value=2 ** 32))
def test_sms_delay_respects_minimum(seed):
    params = StrategyParams(s10_sms_min_ms=500, s10_sms_mean_ms=2000)
    delay = SmsNotification(params).sms_delay_us(np.random.default_rng(seed))
    assert delay >= 500_000


def test_offsets_separate_identical_occasions():
    cfg = PagingConfig()
    schedule = PagingSchedule(PagingOccasion(4, 0), cfg)
    offsets = assign_paging_offsets([schedule, schedule])
    assert offsets == [0, cfg.slot_us]
    assert assign_paging_offsets([schedule, schedule], num_rx=2) == [0, 0]


@settings(max_examples=50)
@given(st.lists(st.integers(min_value=0, max_value=2 ** 32), min_size=2, max_size=3))
def test_assigned_offsets_never_collide(ids):
    cfg = PagingConfig()
    schedules = [PagingSchedule(PagingOccasion(i % cfg.drx_cycle, (i // cfg.drx_cycle) % 4), cfg) for i in ids]
    offsets = assign_paging_offsets(schedules)
    shifted = [PagingSchedule(s.occasion, s.config, off) for s, off in zip(schedules, offsets)]
    for i, a in enumerate(shifted):
        for b in shifted[i + 1:]:
            assert detect_collision_schedules(a, b).collisions == 0


@given(st.integers(min_value=0, max_value=2 ** 32 - 1))
def test_alt_id_revoke_undoes_proposal(alt_id):
    sim = SimProfile(sim_index=1, plmn_id=2, generation=G5, identity=UeIdentity(imsi=310150123456789))
    before = (sim.alt_ue_id, sim.alt_ue_id_confirmed, sim.identity)
    proposed = propose_alt_id(sim, alt_id)
    assert proposed.alt_ue_id == alt_id
    assert not proposed.alt_ue_id_confirmed
    assert (revoke_alt_id(proposed).alt_ue_id, sim.alt_ue_id_confirmed, sim.identity) == before


def test_dense_occasions_have_no_feasible_offset():
    cfg = PagingConfig(drx_cycle=1, occasions_per_frame=1)
    schedule = PagingSchedule(PagingOccasion(0, 0), cfg)
    assert first_fit_shift(schedule, [schedule]) is None
    with pytest.raises(NoFeasibleOffsetError):
        assign_paging_offsets([schedule, schedule], device_id=5)


if __name__ == '__main__':
    sys.exit(pytest.main([__file__, '-v']))
