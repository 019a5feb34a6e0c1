#!/usr/bin/env python3
"""
Engine tests - determinism, MT bookkeeping and strategy behaviour end to end
"""
import sys
import logging
from collections import Counter
sys.path.insert(0, '.')

import pytest

from domain.errors import ConfigInvalidError
from domain.types import ms_to_us
from runner.scenario import build_scenario, load_scenario
from sim.engine import SimulationEngine, run

logger = logging.getLogger(__name__)

NO_MT = {'VOICE': 0, 'SMS': 0, 'DATA': 0}
NO_MO = {'VOICE': 0, 'DATA': 0}
# long data sessions on one SIM while voice calls arrive on the other
BUSY_TRAFFIC = dict(
    mt_rates={'VOICE': 30},
    mo_rates={'DATA': 120},
    durations={'DATA': 600, 'VOICE': 30},
)
ACCEPT_ALL = [{'service': '*', 'activity': '*', 'action': 'ACCEPT_LEAVE'}]
REJECT_ALL = [{'service': '*', 'activity': '*', 'action': 'REJECT_BUSY'}]


def _records(result, kind):
    return [r for r in result.records if r.kind == kind]


def _dense_paging_scenario(strategies=()):
    """Two occasions per cycle, so about half of all devices collide"""
    network = {'generation': '5G', 'paging': {'drx_cycle': 2, 'occasions_per_frame': 1}}
    return load_scenario({
        'scenario_id': 'dense-paging',
        'networks': [dict(network, name='opA', plmn_id=1, mno='a'), dict(network, name='opB', plmn_id=2, mno='b')],
        'devices': {'count': 40, 'num_rx': 1, 'mode': 'DSDS', 'sim_networks': [0, 1]},
        'traffic': {'mt_rates_per_hour': NO_MT, 'mo_rates_per_hour': NO_MO},
        'mobility': {'dwell_mean_s': 0},
        'strategies': list(strategies),
        'horizon_s': 5,
    })


def test_same_seed_same_log():
    scenario = build_scenario('determinism', devices=6, horizon_s=300, dwell_mean_s=30)
    a, b = run(scenario, 11), run(scenario, 11)
    assert a.digest == b.digest
    assert [r.to_dict() for r in a.records] == [r.to_dict() for r in b.records]
    assert run(scenario, 12).digest != a.digest
    logger.info(f"✓ digest {a.digest[:12]} reproduced")


def test_every_mt_resolved_exactly_once():
    scenario = build_scenario('mt-bookkeeping', devices=8, horizon_s=600, dwell_mean_s=60, **BUSY_TRAFFIC)
    result = run(scenario, 3)
    arrivals = {r.data['mt_id'] for r in _records(result, 'mt_arrival')}
    outcomes = Counter(r.data['mt_id'] for r in _records(result, 'mt_outcome'))
    assert arrivals
    assert set(outcomes) == arrivals
    assert all(n == 1 for n in outcomes.values())
    ledger = result.ledger
    assert ledger.check() == []
    assert ledger.mt_resolved == ledger.mt_arrivals
    run_end = _records(result, 'run_end')
    assert len(run_end) == 1
    assert run_end[0].data['duration_us'] == scenario.horizon_us


def test_quiet_scenario_never_pages():
    scenario = build_scenario('quiet', devices=3, horizon_s=60, mt_rates={}, mo_rates={})
    result = run(scenario)
    assert _records(result, 'mt_arrival') == []
    assert _records(result, 'page_attempt') == []
    assert len(_records(result, 'registered')) == 6
    ledger = result.ledger
    assert ledger.rx_on_us > 0
    assert ledger.signaling_units > 0


def test_invalid_stacks_are_rejected():
    with pytest.raises(ConfigInvalidError):
        build_scenario('bad', generations=('4G', '4G'), strategies=(3,))
    scenario = build_scenario('ok', devices=1, horizon_s=10)
    with pytest.raises(ConfigInvalidError):
        SimulationEngine(scenario.with_stack((11, 13)))


def test_busy_indication_declines_and_stops_paging():
    kwargs = dict(devices=8, horizon_s=600, num_rx=2, mode='DSDA', policy=REJECT_ALL, **BUSY_TRAFFIC)
    with_busy = run(build_scenario('busy', strategies=(3,), params={'busy_while_inactive': True}, **kwargs), 5)
    without = run(build_scenario('busy', **kwargs), 5)

    ledger = with_busy.ledger
    assert ledger.mt_conflicts > 0
    assert ledger.paging_busy > 0
    busy_msgs = [r for r in with_busy.records if r.kind == 'BusyIndication']
    assert len(busy_msgs) == ledger.paging_busy
    assert all(r.strategy == 3 for r in busy_msgs)

    declined = {r.data['mt_id'] for r in _records(with_busy, 'mt_outcome') if r.data['outcome'] == 'DECLINED'}
    for outcome in _records(with_busy, 'paging_outcome'):
        if outcome.data['busy']:
            assert set(outcome.data['mt_ids']) <= declined

    assert without.ledger.paging_busy == 0
    assert without.ledger.mt_declined == 0


def test_busy_indication_only_on_5g_sims():
    kwargs = dict(devices=8, horizon_s=600, num_rx=2, mode='DSDA', policy=REJECT_ALL, **BUSY_TRAFFIC)
    scenario = build_scenario('mix', generations=('5G', '4G'), strategies=(3,),
                              params={'busy_while_inactive': True}, **kwargs)
    result = run(scenario, 5)
    busy_msgs = [r for r in result.records if r.kind == 'BusyIndication']
    assert all(r.sim == 0 for r in busy_msgs)
    assert not [r for r in _records(result, 'paging_outcome') if r.sim == 1 and r.data['busy']]
    assert result.ledger.paging_busy == len(busy_msgs)


def test_energy_counts_paging_monitoring_only():
    result = run(build_scenario('energy', devices=4, horizon_s=600, **BUSY_TRAFFIC), 2)
    rx_on = _records(result, 'rx_on')
    assert rx_on
    assert {r.data['mode'] for r in rx_on} <= {'idle', 'gap', 'absence'}
    assert result.ledger.rx_on_us == sum(r.data['duration_us'] for r in rx_on)


@pytest.mark.parametrize('stack', [(), (4,), (5,), (6,)])
def test_leave_latency_per_strategy(stack):
    scenario = build_scenario('leave', devices=8, horizon_s=600, num_rx=2, mode='DSDA', policy=ACCEPT_ALL,
                              strategies=stack, **BUSY_TRAFFIC)
    delays = scenario.delays
    switch = scenario.devices.switch_delay_us
    expected = {
        (): switch,
        (4,): switch,
        (5,): 2 * delays.as_us + switch,
        (6,): 2 * delays.as_us + 2 * delays.nas_us + switch,
    }[stack]
    ledger = run(scenario, 9).ledger
    assert ledger.leaves > 0
    assert set(ledger.leave_latencies_us) == {expected}


def test_default_leave_latencies():
    scenario = build_scenario('leave-default', devices=1, horizon_s=1,
                              as_delay_ms=2, nas_delay_ms=10, inter_plmn_delay_ms=30)
    d, sw = scenario.delays, ms_to_us(5)
    assert (sw, 2 * d.as_us + sw, 2 * d.as_us + 2 * d.nas_us + sw) == (ms_to_us(5), ms_to_us(9), ms_to_us(29))


def test_paging_offsets_remove_collisions():
    baseline = run(_dense_paging_scenario()).ledger
    assert baseline.po_checks == 40
    assert baseline.po_collisions > 0

    shifted = run(_dense_paging_scenario((13,))).ledger
    assert shifted.po_checks == 40
    assert shifted.po_collisions == 0
    assert shifted.offset_infeasible == 0
    assert shifted.strategy_units.get(13, 0) > 0


def test_non3gpp_notification_stops_secondary_monitoring():
    scenario = build_scenario('n3iwf', devices=6, horizon_s=600, strategies=(9,), mt_rates={'VOICE': 20, 'SMS': 20})
    result = run(scenario, 2)
    registered = {r.sim: r.data['monitored'] for r in _records(result, 'registered')}
    assert registered == {0: True, 1: False}
    assert not [r for r in _records(result, 'page_attempt') if r.sim == 1]
    assert not [r for r in _records(result, 'rx_on') if r.sim == 1]
    assert result.ledger.strategy_units.get(9, 0) > 0
    assert result.ledger.check() == []


def test_scheduling_gap_requested_on_connect():
    scenario = build_scenario('gap', devices=4, horizon_s=300, strategies=(7,), **BUSY_TRAFFIC)
    result = run(scenario, 4)
    kinds = {r.kind for r in result.records if r.strategy == 7}
    assert 'SchedulingGapRequest' in kinds
    assert 'SchedulingGapGrant' in kinds


def test_resume_is_cheaper_than_setup_in_5g():
    scenario = build_scenario('resume', devices=6, horizon_s=900, mt_rates={'DATA': 30}, mo_rates={'DATA': 60},
                              durations={'DATA': 5})
    ledger = run(scenario, 6).ledger
    assert ledger.setup_connections > 0
    assert ledger.setup_units_per_connection == 6
    assert ledger.resume_connections > 0
    assert ledger.resume_units_per_connection == 3


def test_same_plmn_scenario_runs():
    scenario = build_scenario('same-plmn', same_plmn=True, devices=4, horizon_s=120)
    assert scenario.classify()['cell_camping'] == 'same PLMN'
    result = run(scenario)
    assert result.ledger.check() == []


if __name__ == '__main__':
    sys.exit(pytest.main([__file__, '-v']))
