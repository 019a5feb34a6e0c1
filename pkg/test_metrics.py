#!/usr/bin/env python3
"""
Metrics tests - ledger fold, ledger merging, axis scores and direction checks
"""
import sys
import logging
from functools import lru_cache
sys.path.insert(0, '.')

import pytest
from hypothesis import given, settings, strategies as st

from metrics.axes import AxisScore, axis_scores, energy_ms_per_hour, overhead_per_mt, scalability_slope
from metrics.ledger import MetricsLedger, compute_ledger, merge_ledgers
from metrics.report import FAIL, PASS, SKIPPED, ComparisonReport, GroupResult, direction_checks
from runner.scenario import build_scenario
from sim.engine import run
from sim.events import EventRecord

logger = logging.getLogger(__name__)


def _msg(kind, segment, weight, strategy=None):
    return EventRecord(time_us=0, kind=kind, node='ue:0', device=0, sim=0, strategy=strategy,
                       size_weight=weight, segment=segment)


def _rec(kind, **data):
    return EventRecord(time_us=0, kind=kind, device=0, sim=0, data=data)


@lru_cache(maxsize=1)
def _sample_log():
    scenario = build_scenario('ledger-sample', devices=5, horizon_s=300, dwell_mean_s=40,
                              mt_rates={'VOICE': 20, 'DATA': 20}, mo_rates={'DATA': 30})
    return tuple(run(scenario, 21).records)


def test_empty_log_gives_zero_ledger():
    ledger = compute_ledger([])
    assert ledger == MetricsLedger()
    assert ledger.check() == []
    assert ledger.median_latency_ms is None
    assert overhead_per_mt(ledger) == 0.0
    assert energy_ms_per_hour(ledger) == 0.0


def test_fold_counts_messages_and_outcomes():
    records = [
        _msg('PageCn', 'CN', 2),
        _msg('PageRan', 'RAN', 1),
        _msg('PushNotification', 'INTER_PLMN', 3, strategy=8),
        _rec('mt_arrival', mt_id=0, conflict=True),
        _rec('mt_arrival', mt_id=1, conflict=False),
        _rec('mt_outcome', mt_id=0, outcome='DELIVERED', conflict=True, latency_us=40_000, setup_us=12_000),
        _rec('mt_outcome', mt_id=1, outcome='FAILED', conflict=False, latency_us=None, setup_us=None),
        _rec('paging_outcome', responded=False, busy=False, attempts=9, wasted_units=135, escalated=True,
             misleading=True),
        _rec('interruption', duration_us=5_000),
        _rec('rx_on', duration_us=2_500),
        _rec('connection', path='setup', units=6),
        _rec('connection', path='resume', units=3),
        EventRecord(time_us=3_600_000_000, kind='run_end',
                    data={'duration_us': 3_600_000_000, 'devices': 2, 'mt_arrivals': 2}),
    ]
    ledger = compute_ledger(records)
    assert ledger.messages == 3
    assert (ledger.signaling_units_cn, ledger.signaling_units_ran, ledger.signaling_units_inter) == (2, 1, 3)
    assert ledger.signaling_units == 6
    assert ledger.strategy_units == {8: 3}
    assert (ledger.mt_arrivals, ledger.mt_conflicts, ledger.mt_delivered, ledger.mt_failed) == (2, 1, 1, 1)
    assert ledger.median_latency_ms == 40.0
    assert ledger.median_conflict_latency_ms == 40.0
    assert ledger.median_setup_latency_ms == 12.0
    assert ledger.wasted_paging_units == 135
    assert ledger.misleading_reachability_events == 1
    assert ledger.paging_failures == 1
    assert ledger.paging_escalations == 1
    assert ledger.interruption_ms == 5.0
    assert ledger.device_hours == 2.0
    assert energy_ms_per_hour(ledger) == pytest.approx(2.5 / 2)
    assert ledger.resume_units_per_connection < ledger.setup_units_per_connection
    assert overhead_per_mt(ledger) == 3.0
    assert ledger.check() == []


def test_check_flags_unresolved_mt():
    ledger = compute_ledger([_rec('mt_arrival', mt_id=0, conflict=False)])
    assert ledger.check()


def test_ineffective_po_checks_are_ignored():
    ledger = compute_ledger([
        _rec('po_check', effective=False, colliding=True, fraction=1.0),
        _rec('po_check', effective=True, colliding=False, fraction=0.0),
    ])
    assert (ledger.po_checks, ledger.po_collisions) == (1, 0)


_ledgers = st.builds(
    MetricsLedger,
    interruption_us=st.integers(0, 10 ** 9),
    signaling_units=st.integers(0, 10 ** 6),
    mt_arrivals=st.integers(0, 1000),
    mt_delivered=st.integers(0, 1000),
    mt_latencies_us=st.lists(st.integers(0, 10 ** 7), max_size=5).map(tuple),
    strategy_units=st.dictionaries(st.integers(1, 14), st.integers(0, 1000), max_size=4),
)


@given(_ledgers, _ledgers, _ledgers)
def test_merge_is_associative(a, b, c):
    assert (a + b) + c == a + (b + c)
    assert a + MetricsLedger() == a


@settings(max_examples=30, deadline=None)
@given(st.floats(min_value=0.0, max_value=1.0))
def test_ledger_of_split_log_merges_to_whole(fraction):
    records = _sample_log()
    cut = int(len(records) * fraction)
    whole = compute_ledger(records).to_dict()
    merged = merge_ledgers([compute_ledger(records[:cut]), compute_ledger(records[cut:])]).to_dict()
    assert merged.pop('po_collision_fraction_sum') == pytest.approx(whole.pop('po_collision_fraction_sum'))
    assert merged == whole


def test_headline_is_flat():
    headline = compute_ledger(_sample_log()).headline()
    assert all(not isinstance(v, (list, tuple, dict)) for v in headline.values())
    assert headline['mt_arrivals'] > 0


def test_scalability_slope():
    assert scalability_slope([(20, 1.0), (40, 2.0), (80, 4.0)]) == pytest.approx(0.05)
    assert scalability_slope([(20, 1.0), (20, 3.0)]) is None
    assert scalability_slope([]) is None


def test_axis_scores_use_setup_latency():
    ledger = MetricsLedger(mt_arrivals=4, signaling_units=40, mt_latencies_us=(1_000, 9_000),
                           mt_conflict_latencies_us=(9_000,), mt_setup_latencies_us=(2_000, 4_000, 30_000))
    axes = axis_scores(ledger, (11, 8), sweep=[(10, 1.0), (20, 2.0)])
    assert axes.complexity == pytest.approx(3.5)
    assert axes.overhead == 10.0
    assert axes.latency_ms == 4.0
    assert axes.scalability == pytest.approx(0.1)
    assert axis_scores(MetricsLedger(mt_latencies_us=(5_000,)), ()).latency_ms is None


def _group(name, active, latency=None, energy=0.0, ledger=None):
    ledger = ledger or MetricsLedger()
    return GroupResult(name, active, ledger, AxisScore(0.0, 0.0, latency_ms=latency, energy_ms_per_hour=energy))


def test_direction_checks_pass():
    groups = {
        'baseline': _group('baseline', (), energy=100.0,
                           ledger=MetricsLedger(setup_connections=2, setup_units=12,
                                                resume_connections=1, resume_units=3)),
        'ran_based': _group('ran_based', (13, 7, 2), latency=170.0),
        'cn_based': _group('cn_based', (11, 8), latency=400.0),
        'notify_9': _group('notify_9', (9,), energy=60.0),
    }
    checks = {c.name: c for c in direction_checks(groups)}
    assert checks['complexity'].status == PASS
    assert checks['latency'].status == PASS
    assert checks['energy'].status == PASS
    assert checks['inactive_resume'].status == PASS
    report = ComparisonReport('s', [1], {'cn_connection': '5G+5G'}, groups, list(checks.values()))
    assert report.passed
    markdown = report.to_markdown()
    assert '## Direction checks' in markdown
    assert 'Overall: PASS' in markdown


def test_direction_checks_skip_missing_inputs():
    groups = {
        'baseline': _group('baseline', ()),
        'ran_based': _group('ran_based', (13, 7, 2), latency=None),
        'cn_based': GroupResult('cn_based', (11, 8), skipped_reason='requires 5G'),
    }
    checks = {c.name: c for c in direction_checks(groups)}
    assert checks['latency'].status == SKIPPED
    assert checks['inactive_resume'].status == SKIPPED
    assert 'energy' not in checks


def test_equal_stacks_fail_complexity():
    groups = {'ran_based': _group('ran_based', (), latency=1.0), 'cn_based': _group('cn_based', (), latency=1.0)}
    checks = {c.name: c for c in direction_checks(groups)}
    assert checks['complexity'].status == FAIL
    assert checks['latency'].status == FAIL


if __name__ == '__main__':
    sys.exit(pytest.main([__file__, '-v']))
