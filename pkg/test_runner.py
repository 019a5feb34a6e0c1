#!/usr/bin/env python3
"""
Runner tests - scenario files, overrides, replications, sweeps, artifacts and the CLI
"""
import sys
import json
import logging
from pathlib import Path
sys.path.insert(0, '.')

import pandas as pd
import pytest

from domain.errors import ConfigInvalidError
from main import main, parse_values
from metrics.report import compare
from runner.orchestrator import (
    CSV_COLUMNS, replication_seeds, results_frame, run_replications, run_sweep, scenario_with,
    write_event_logs, write_results_csv,
)
from runner.scenario import Scenario, apply_overrides, build_scenario, load_scenario, parse_override, validate_scenario
from sim.events import log_digest, read_ndjson

logger = logging.getLogger(__name__)

PRESETS = sorted(Path(__file__).parent.joinpath('presets').glob('*.json'))
SMALL = ['devices.count=2', 'horizon_s=30']


def _small(preset='dual_5g.json'):
    return load_scenario(str(Path(__file__).parent / 'presets' / preset), SMALL)


@pytest.mark.parametrize('path', PRESETS, ids=lambda p: p.stem)
def test_presets_are_valid(path):
    outcome = validate_scenario(str(path))
    assert isinstance(outcome, Scenario), outcome
    assert outcome.validate() == []


def test_preset_classification():
    assert _small('dual_5g.json').classify()['cn_connection'] == '5G+5G'
    assert _small('mixed_5g_4g.json').classify()['cn_connection'] == '5G+4G'
    assert _small('dual_rx_5g.json').classify()['ue_configuration'] == 'dual-rx DSDA'
    same = _small('same_mno_5g.json').classify()
    assert same['cell_camping'] == 'same PLMN'
    assert same['mno_configuration'] == 'same MNO'


def test_overrides():
    data = {'devices': {'count': 5}, 'networks': [{'name': 'a'}, {'name': 'b'}]}
    out = apply_overrides(data, ['devices.count=9', 'networks.1.generation=4G', 'strategies=[1,2]'])
    assert out['devices']['count'] == 9
    assert out['networks'][1]['generation'] == '4G'
    assert out['strategies'] == [1, 2]
    assert data['devices']['count'] == 5
    assert parse_override('seed=3') == (['seed'], 3)
    with pytest.raises(ConfigInvalidError):
        parse_override('no-equals-sign')


def test_invalid_scenario_lists_violations():
    violations = validate_scenario(build_scenario('v', devices=1).to_dict(), ['devices.count=0', 'horizon_s=-1'])
    assert isinstance(violations, list)
    assert any('devices.count' in v for v in violations)
    assert any('horizon_s' in v for v in violations)
    with pytest.raises(ConfigInvalidError):
        load_scenario({'scenario_id': 'x', 'networks': [], 'devices': {'mode': 'TRIPLE'}})


def test_scenario_dict_survives_reload():
    scenario = _small('mixed_5g_4g.json').with_stack((1, 13))
    as_json = json.dumps(scenario.to_dict(), sort_keys=True)
    again = Scenario.from_dict(json.loads(as_json))
    assert json.dumps(again.to_dict(), sort_keys=True) == as_json
    assert again.strategies.active == (1, 13)
    assert scenario_with(scenario, 'devices.count', 7).devices.count == 7


def test_replications_are_seed_ordered():
    scenario = _small()
    seeds = replication_seeds(scenario, 4, 3)
    assert seeds == [4, 5, 6]
    reps = run_replications(scenario, seeds)
    assert [r.seed for r in reps] == seeds
    frame = results_frame(reps)
    assert list(frame.columns) == CSV_COLUMNS
    assert len(frame) == 3
    assert (frame['cn_connection'] == '5G+5G').all()


def test_results_csv_and_event_logs(tmp_path):
    reps = run_replications(_small(), [1, 2])
    path = write_results_csv(reps, str(tmp_path))
    frame = pd.read_csv(path)
    assert list(frame.columns) == CSV_COLUMNS
    assert frame['seed'].tolist() == [1, 2]
    logs = write_event_logs(reps, str(tmp_path))
    assert [p.name for p in logs] == ['events-1.ndjson', 'events-2.ndjson']
    assert log_digest(read_ndjson(str(logs[0]))) == reps[0].result.digest


def test_device_count_sweep_sets_slope():
    points = run_sweep(_small(), 'devices.count', [1, 3], [1])
    assert [p.value for p in points] == [1, 3]
    slopes = {rep.scalability for p in points for rep in p.replications}
    assert len(slopes) == 1
    assert slopes.pop() is not None
    assert points[1].replications[0].row()['sweep_value'] == 3


def test_sweep_rejects_invalid_values():
    with pytest.raises(ConfigInvalidError):
        run_sweep(_small(), 'devices.num_rx', [3], [1])


def test_empty_stacks_score_identically():
    report = compare(_small(), ran_stack=(), cn_stack=(), notify_stacks=[], seeds=[1])
    ran, cn = report.groups['ran_based'], report.groups['cn_based']
    assert ran.axes == cn.axes
    assert ran.ledger == cn.ledger


def test_compare_skips_inapplicable_groups():
    scenario = load_scenario(str(Path(__file__).parent / 'presets' / 'dual_4g.json'), SMALL)
    report = compare(scenario, notify_stacks=[[9]], seeds=[1])
    assert not report.groups['ran_based'].ran
    assert 'requires 5G' in report.groups['ran_based'].skipped_reason
    assert report.groups['notify_9'].ran


def test_parse_values():
    assert parse_values('20, 40,80') == [20, 40, 80]
    assert parse_values('cn,ran') == ['cn', 'ran']


def test_cli_validate():
    assert main(['validate', str(PRESETS[0])]) == 0
    assert main(['validate', str(PRESETS[0]), '--set', 'devices.count=0']) == 2
    assert main(['validate', 'does-not-exist.json']) == 2


def test_cli_run_writes_artifacts(tmp_path):
    out = tmp_path / 'out'
    code = main(['run', str(Path(__file__).parent / 'presets' / 'dual_5g.json'), '--reps', '1', '--out', str(out),
                 '--log-events', '--set', 'devices.count=2', '--set', 'horizon_s=20'])
    assert code == 0
    assert (out / 'results.csv').exists()
    assert (out / 'report.md').exists()
    assert (out / 'events-1.ndjson').exists()
    report = (out / 'report.md').read_text(encoding='utf-8')
    assert 'Direction checks' in report
    assert 'falls back to CN paging' in report



def test_cli_sweep_writes_one_row_per_point(tmp_path):
    out = tmp_path / 'sweep'
    code = main(['sweep', str(Path(__file__).parent / 'presets' / 'dual_5g.json'), '--param', 'devices.count',
                 '--values', '1,2', '--reps', '1', '--out', str(out), '--set', 'horizon_s=20'])
    assert code == 0
    frame = pd.read_csv(out / 'results.csv')
    assert frame['sweep_value'].tolist() == [1, 2]
    assert frame['scalability'].notna().all()
    assert main(['sweep', str(PRESETS[0]), '--param', 'devices.count', '--values', ',', '--out', str(out)]) == 2


if __name__ == '__main__':
    sys.exit(pytest.main([__file__, '-v']))
