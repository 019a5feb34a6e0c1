"""
Run orchestration - replications, sweeps and result artifacts
"""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence
import json
import logging

import pandas as pd

from domain.errors import ConfigInvalidError
from metrics.axes import AxisScore, axis_scores, overhead_per_mt, scalability_slope
from metrics.ledger import MetricsLedger, compute_ledger, merge_ledgers
from sim.engine import RunResult, SimulationEngine
from sim.events import to_ndjson_lines
from .scenario import Scenario, apply_overrides

logger = logging.getLogger(__name__)

CLASSIFICATION_COLUMNS = ['cn_connection', 'ue_configuration', 'mno_configuration', 'cell_camping', 'services']
LEDGER_COLUMNS = list(MetricsLedger().headline().keys())
AXIS_COLUMNS = ['complexity', 'overhead', 'scalability', 'latency_ms', 'energy_ms_per_hour']
CSV_COLUMNS = (['scenario_id', 'seed', 'stack', 'sweep_param', 'sweep_value']
               + CLASSIFICATION_COLUMNS + ['digest'] + LEDGER_COLUMNS + AXIS_COLUMNS)


@dataclass
class Replication:
    """One finished replication with its ledger; the raw log stays attached for artifact writing"""
    result: RunResult
    ledger: MetricsLedger
    active: tuple
    sweep_param: str = ''
    sweep_value: Any = None
    scalability: Optional[float] = None

    @property
    def seed(self) -> int:
        return self.result.seed

    @property
    def axes(self) -> AxisScore:
        return axis_scores(self.ledger, self.active)

    def row(self) -> Dict[str, Any]:
        r = self.result
        row: Dict[str, Any] = {
            'scenario_id': r.scenario_id,
            'seed': r.seed,
            'stack': r.stack_label,
            'sweep_param': self.sweep_param,
            'sweep_value': self.sweep_value,
        }
        row.update({k: r.classification.get(k, '') for k in CLASSIFICATION_COLUMNS})
        row['digest'] = r.digest
        row.update(self.ledger.headline())
        axes = self.axes.to_dict()
        axes['scalability'] = self.scalability
        row.update(axes)
        return {c: row.get(c) for c in CSV_COLUMNS}


@dataclass
class SweepPoint:
    value: Any
    replications: List[Replication] = field(default_factory=list)

    @property
    def ledger(self) -> MetricsLedger:
        return merge_ledgers(r.ledger for r in self.replications)


def replication_seeds(scenario: Scenario, seed: Optional[int] = None, reps: Optional[int] = None) -> List[int]:
    """Consecutive seeds starting at the scenario (or given) seed"""
    base = scenario.seed if seed is None else int(seed)
    count = scenario.replications if reps is None else int(reps)
    return [base + i for i in range(max(1, count))]


def run_replication(scenario: Scenario, seed: int) -> Replication:
    """One engine run; module-level so process pools can pickle it"""
    result = SimulationEngine(scenario, seed).run()
    return Replication(result, compute_ledger(result.records), tuple(scenario.strategies.active))


def run_replications(scenario: Scenario, seeds: Sequence[int], workers: int = 1) -> List[Replication]:
    """
    Run every seed of a scenario, in parallel when workers > 1

    Returns:
        Replications in seed order, whatever order the workers finished in
    """
    seeds = list(seeds)
    logger.info(f"[Runner] {scenario.scenario_id} stack={scenario.strategies.label} "
                f"seeds={seeds[0]}..{seeds[-1]} workers={workers}")
    if workers <= 1 or len(seeds) == 1:
        reps = [run_replication(scenario, s) for s in seeds]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            reps = list(pool.map(run_replication, [scenario] * len(seeds), seeds))
    reps.sort(key=lambda r: r.seed)
    total = merge_ledgers(r.ledger for r in reps)
    logger.info(f"[Runner] {scenario.scenario_id}: {total.mt_arrivals} MT, {total.mt_delivered} delivered, "
                f"{total.signaling_units} signaling units, {total.misleading_reachability_events} misleading")
    return reps


def scenario_with(scenario: Scenario, param: str, value: Any) -> Scenario:
    """Copy of the scenario with one dotted parameter replaced"""
    return Scenario.from_dict(apply_overrides(scenario.to_dict(), [f"{param}={json.dumps(value)}"]))


def run_sweep(scenario: Scenario, param: str, values: Sequence[Any], seeds: Sequence[int],
              workers: int = 1) -> List[SweepPoint]:
    """
    Vary one parameter; for a device-count sweep the overhead slope is attached to every row

    Args:
        scenario: Base scenario
        param: Dotted scenario key, e.g. 'devices.count'
        values: Values to try, in order
        seeds: Seeds shared by every point
        workers: Process pool size

    Returns:
        One SweepPoint per value
    """
    points = []
    for value in values:
        varied = scenario_with(scenario, param, value)
        violations = varied.validate()
        if violations:
            raise ConfigInvalidError(violations)
        reps = run_replications(varied, seeds, workers)
        for rep in reps:
            rep.sweep_param, rep.sweep_value = param, value
        points.append(SweepPoint(value, reps))
    if param == 'devices.count':
        slope = scalability_slope([(float(p.value), overhead_per_mt(p.ledger)) for p in points])
        logger.info(f"[Runner] overhead slope over {param}: {slope}")
        for p in points:
            for rep in p.replications:
                rep.scalability = slope
    return points


# ---------------------------------------------------------------------- artifacts

def results_frame(replications: Sequence[Replication]) -> pd.DataFrame:
    """One row per replication in the fixed CSV column order"""
    return pd.DataFrame([r.row() for r in replications], columns=CSV_COLUMNS)


def write_results_csv(replications: Sequence[Replication], out_dir: str) -> Path:
    path = Path(out_dir) / 'results.csv'
    path.parent.mkdir(parents=True, exist_ok=True)
    results_frame(replications).to_csv(path, index=False)
    logger.info(f"[Runner] results saved to: {path}")
    return path


def write_event_logs(replications: Sequence[Replication], out_dir: str) -> List[Path]:
    paths = []
    for rep in replications:
        suffix = f"-{rep.sweep_value}" if rep.sweep_param else ''
        path = Path(out_dir) / f"events-{rep.seed}{suffix}.ndjson"
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding='utf-8') as f:
            for line in to_ndjson_lines(rep.result.records):
                f.write(line + '\n')
        paths.append(path)
    logger.info(f"[Runner] wrote {len(paths)} event logs to {out_dir}")
    return paths


def write_report(markdown: str, out_dir: str) -> Path:
    path = Path(out_dir) / 'report.md'
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(markdown, encoding='utf-8')
    logger.info(f"[Runner] report saved to: {path}")
    return path
