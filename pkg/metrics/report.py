"""
RAN-based vs CN-based comparison report

Runs matched scenarios (same seeds) per strategy group, scores the five axes
and evaluates the directional claims as pass/fail checks.
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence
import logging

import pandas as pd

import config
from .axes import AxisScore, axis_scores, overhead_per_mt, stack_complexity
from .ledger import MetricsLedger, merge_ledgers

logger = logging.getLogger(__name__)

PASS, FAIL, SKIPPED = 'PASS', 'FAIL', 'SKIPPED'


@dataclass
class GroupResult:
    name: str
    active: tuple
    ledger: Optional[MetricsLedger] = None
    axes: Optional[AxisScore] = None
    skipped_reason: str = ''

    @property
    def ran(self) -> bool:
        return self.ledger is not None


@dataclass
class DirectionCheck:
    name: str
    claim: str
    status: str
    detail: str = ''

    @property
    def failed(self) -> bool:
        return self.status == FAIL


@dataclass
class ComparisonReport:
    scenario_id: str
    seeds: List[int]
    classification: Dict[str, str]
    groups: Dict[str, GroupResult] = field(default_factory=dict)
    checks: List[DirectionCheck] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not any(c.failed for c in self.checks)

    def summary_frame(self) -> pd.DataFrame:
        rows = []
        for g in self.groups.values():
            row = {'group': g.name, 'stack': ','.join(str(s) for s in g.active) or 'baseline'}
            if g.ran:
                row.update(g.axes.to_dict())
                row.update({k: g.ledger.headline()[k] for k in (
                    'mt_arrivals', 'mt_delivered', 'interruption_ms', 'wasted_paging_units',
                    'misleading_reachability_events', 'po_collisions', 'signaling_units')})
            else:
                row['skipped'] = g.skipped_reason
            rows.append(row)
        return pd.DataFrame(rows)

    def to_markdown(self) -> str:
        lines = [f"# Comparison report: {self.scenario_id}", ""]
        lines.append(f"Seeds: {', '.join(str(s) for s in self.seeds)}")
        lines.append("")
        lines.append("## Scenario classification")
        lines.append("")
        for key, value in self.classification.items():
            lines.append(f"- {key.replace('_', ' ')}: {value}")
        lines.append("")
        lines.append("## Axis scores per group")
        lines.append("")
        lines.append("Complexity: new message kinds plus impacted node types (lower is simpler). "
                     "Overhead: signaling units per MT event (AS=1, NAS=2, inter-PLMN=3). "
                     "Scalability: overhead slope over a device-count sweep. "
                     "Latency: median MT setup latency, first page sent to service start, ms. "
                     "Energy: paging-monitoring receiver-on ms per device-hour; connected sessions are not counted.")
        lines.append("")
        lines.append(_frame_to_markdown(self.summary_frame()))
        lines.append("")
        lines.append("## Direction checks")
        lines.append("")
        lines.append("| check | claim | result | detail |")
        lines.append("|---|---|---|---|")
        for c in self.checks:
            lines.append(f"| {c.name} | {c.claim} | {c.status} | {c.detail} |")
        lines.append("")
        lines.append(f"Overall: {'PASS' if self.passed else 'FAIL'}")
        if self.notes:
            lines.append("")
            lines.append("## Modelling notes")
            lines.append("")
            lines.extend(f"- {note}" for note in self.notes)
        return "\n".join(lines) + "\n"


def modelling_notes(scenario) -> List[str]:
    """Assumptions the numbers depend on"""
    return [
        "RAN paging failure " + ("falls back to CN paging" if scenario.ran_failure_fallback_to_cn
                                 else "is final; CN paging is not retried"),
        "s02: the comeback to the secondary network is not signalled",
        "strategy message sequences are reconstructed from their prose descriptions",
        "axis directions: lower is better on every axis",
    ]


def _frame_to_markdown(df: pd.DataFrame) -> str:
    if df.empty:
        return "(no groups)"
    cols = list(df.columns)
    out = ["| " + " | ".join(cols) + " |", "|" + "---|" * len(cols)]
    for _, row in df.iterrows():
        cells = []
        for c in cols:
            v = row[c]
            if isinstance(v, float):
                cells.append('' if pd.isna(v) else f"{v:.3f}")
            else:
                cells.append('' if v is None else str(v))
        out.append("| " + " | ".join(cells) + " |")
    return "\n".join(out)


def _fmt(value: Optional[float]) -> str:
    return 'n/a' if value is None else f"{value:.3f}"


def direction_checks(groups: Dict[str, GroupResult]) -> List[DirectionCheck]:
    """Directional claims; a check whose inputs are missing is SKIPPED, never FAIL"""
    checks = []
    ran, cn, base = groups.get('ran_based'), groups.get('cn_based'), groups.get('baseline')

    if ran is not None and cn is not None:
        cn_cx, ran_cx = stack_complexity(cn.active), stack_complexity(ran.active)
        checks.append(DirectionCheck('complexity', 'CN-based < RAN-based', PASS if cn_cx < ran_cx else FAIL,
                                     f"CN {_fmt(cn_cx)} vs RAN {_fmt(ran_cx)}"))
        ran_lat = ran.axes.latency_ms if ran.ran else None
        cn_lat = cn.axes.latency_ms if cn.ran else None
        if ran_lat is None or cn_lat is None:
            status = SKIPPED
        else:
            status = PASS if ran_lat < cn_lat else FAIL
        checks.append(DirectionCheck('latency', 'RAN-based < CN-based', status,
                                     f"RAN {_fmt(ran_lat)} ms vs CN {_fmt(cn_lat)} ms"))

    notify = [g for name, g in groups.items() if name.startswith('notify') and g.ran]
    if base is not None and base.ran and notify:
        group_energy = sum(g.axes.energy_ms_per_hour for g in notify) / len(notify)
        base_energy = base.axes.energy_ms_per_hour
        checks.append(DirectionCheck(
            'energy', 'CN notification group < dual-monitoring baseline',
            PASS if group_energy < base_energy else FAIL,
            f"notify {_fmt(group_energy)} vs baseline {_fmt(base_energy)} ms/h",
        ))

    if base is not None and base.ran:
        resume = base.ledger.resume_units_per_connection
        setup = base.ledger.setup_units_per_connection
        if resume is None or setup is None:
            status = SKIPPED
        else:
            status = PASS if resume < setup else FAIL
        checks.append(DirectionCheck('inactive_resume', 'resume signaling < idle setup signaling', status,
                                     f"resume {_fmt(resume)} vs setup {_fmt(setup)} units"))
    return checks


def compare(scenario, ran_stack: Optional[Sequence[int]] = None, cn_stack: Optional[Sequence[int]] = None,
            notify_stacks: Optional[Sequence[Sequence[int]]] = None, seeds: Optional[Sequence[int]] = None,
            workers: int = 1, sweep_devices: Optional[Sequence[int]] = None) -> ComparisonReport:
    """
    Run the baseline and every strategy group on shared seeds and score them

    Args:
        scenario: Base scenario; its own strategy stack is ignored
        ran_stack, cn_stack: Group stacks (defaults from config)
        notify_stacks: Single Rx/Tx notification stacks compared against the baseline
        seeds: Shared seeds (default: scenario seed and replications)
        workers: Process pool size
        sweep_devices: Device counts for the scalability slope (None = no sweep)

    Returns:
        ComparisonReport with axis scores per group and the direction checks
    """
    from runner.orchestrator import replication_seeds, run_replications, run_sweep

    ran_stack = tuple(config.COMPARE_RAN_STACK if ran_stack is None else ran_stack)
    cn_stack = tuple(config.COMPARE_CN_STACK if cn_stack is None else cn_stack)
    notify_stacks = config.COMPARE_NOTIFY_STACKS if notify_stacks is None else notify_stacks
    seeds = list(seeds) if seeds else replication_seeds(scenario)

    plan = [('baseline', ()), ('ran_based', ran_stack), ('cn_based', cn_stack)]
    plan += [(f"notify_{'_'.join(str(s) for s in stack)}", tuple(stack)) for stack in notify_stacks]

    report = ComparisonReport(scenario.scenario_id, seeds, scenario.classify(), notes=modelling_notes(scenario))
    for name, stack in plan:
        group = GroupResult(name, stack)
        variant = scenario.with_stack(stack)
        violations = variant.validate()
        if violations:
            group.skipped_reason = '; '.join(violations)
            logger.warning(f"[Report] group {name} skipped: {group.skipped_reason}")
            report.groups[name] = group
            continue
        reps = run_replications(variant, seeds, workers)
        group.ledger = merge_ledgers(r.ledger for r in reps)
        sweep = None
        if sweep_devices:
            points = run_sweep(variant, 'devices.count', sweep_devices, seeds, workers)
            sweep = [(float(p.value), overhead_per_mt(p.ledger)) for p in points]
        group.axes = axis_scores(group.ledger, stack, sweep)
        report.groups[name] = group

    report.checks = direction_checks(report.groups)
    for c in report.checks:
        log = logger.warning if c.failed else logger.info
        log(f"[Report] {c.name}: {c.status} ({c.detail})")
    return report
