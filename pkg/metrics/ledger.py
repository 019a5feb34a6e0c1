"""
Metrics ledger - a deterministic fold over the structured event log
"""
from dataclasses import dataclass, field, fields
from typing import Any, Dict, Iterable, List, Optional, Tuple
import logging

import numpy as np

from sim.events import EventRecord

logger = logging.getLogger(__name__)

US_PER_HOUR = 3_600_000_000


@dataclass
class MetricsLedger:
    """
    Per-run counters and time integrals

    Every field is a sum, a count or an ordered sample list, so ledgers of log
    partitions merge into the ledger of the whole log.
    """
    # ongoing service interruption
    interruption_us: int = 0
    discarded_traffic_us: int = 0
    buffered_traffic_us: int = 0
    # unwanted resource wastage
    wasted_paging_units: int = 0
    # misleading assumption of reachability
    misleading_reachability_events: int = 0
    # collision of paging occasions
    po_checks: int = 0
    po_collisions: int = 0
    po_collision_fraction_sum: float = 0.0
    page_collision_misses: int = 0
    # signaling
    signaling_units: int = 0
    signaling_units_ran: int = 0
    signaling_units_cn: int = 0
    signaling_units_inter: int = 0
    messages: int = 0
    # paging procedures
    pagings: int = 0
    paging_attempts: int = 0
    paging_escalations: int = 0
    paging_busy: int = 0
    paging_failures: int = 0
    # MT traffic
    mt_arrivals: int = 0
    mt_conflicts: int = 0
    mt_delivered: int = 0
    mt_declined: int = 0
    mt_discarded: int = 0
    mt_failed: int = 0
    mt_latencies_us: Tuple[int, ...] = ()
    mt_conflict_latencies_us: Tuple[int, ...] = ()
    mt_setup_latencies_us: Tuple[int, ...] = ()
    mo_started: int = 0
    mo_blocked: int = 0
    # connections
    setup_connections: int = 0
    setup_units: int = 0
    resume_connections: int = 0
    resume_units: int = 0
    leaves: int = 0
    leave_latencies_us: Tuple[int, ...] = ()
    # notification paths
    notifications_received: int = 0
    notifications_lost: int = 0
    push_ignored: int = 0
    # energy
    rx_on_us: int = 0
    # run size
    runs: int = 0
    duration_us: int = 0
    device_us: int = 0  # devices x simulated time
    radio_conflicts: int = 0
    offset_infeasible: int = 0
    # attribution tags: strategy id -> signaling units
    strategy_units: Dict[int, int] = field(default_factory=dict)

    # ------------------------------------------------------------------ derived values

    @property
    def interruption_ms(self) -> float:
        return self.interruption_us / 1000

    @property
    def rx_on_ms(self) -> float:
        return self.rx_on_us / 1000

    @property
    def device_hours(self) -> float:
        return self.device_us / US_PER_HOUR

    @property
    def po_collision_fraction(self) -> float:
        return self.po_collision_fraction_sum / self.po_checks if self.po_checks else 0.0

    @property
    def mt_resolved(self) -> int:
        return self.mt_delivered + self.mt_declined + self.mt_discarded + self.mt_failed

    @staticmethod
    def _median_ms(samples: Tuple[int, ...]) -> Optional[float]:
        return float(np.median(samples)) / 1000 if samples else None

    @property
    def median_latency_ms(self) -> Optional[float]:
        return self._median_ms(self.mt_latencies_us)

    @property
    def median_conflict_latency_ms(self) -> Optional[float]:
        return self._median_ms(self.mt_conflict_latencies_us)

    @property
    def median_setup_latency_ms(self) -> Optional[float]:
        return self._median_ms(self.mt_setup_latencies_us)

    @property
    def mean_leave_latency_ms(self) -> Optional[float]:
        return float(np.mean(self.leave_latencies_us)) / 1000 if self.leave_latencies_us else None

    @property
    def setup_units_per_connection(self) -> Optional[float]:
        return self.setup_units / self.setup_connections if self.setup_connections else None

    @property
    def resume_units_per_connection(self) -> Optional[float]:
        return self.resume_units / self.resume_connections if self.resume_connections else None

    # ------------------------------------------------------------------ combination

    def merge(self, other: 'MetricsLedger') -> 'MetricsLedger':
        """Ledger of the concatenated logs"""
        out = MetricsLedger()
        for f in fields(self):
            a, b = getattr(self, f.name), getattr(other, f.name)
            if isinstance(a, dict):
                merged = dict(a)
                for k, v in b.items():
                    merged[k] = merged.get(k, 0) + v
                setattr(out, f.name, merged)
            else:
                setattr(out, f.name, a + b)
        return out

    def __add__(self, other: 'MetricsLedger') -> 'MetricsLedger':
        return self.merge(other)

    def check(self) -> List[str]:
        """Invariant violations (negative counters, unresolved MT traffic)"""
        errors = []
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, (int, float)) and value < 0:
                errors.append(f"{f.name} is negative ({value})")
        if self.mt_resolved != self.mt_arrivals:
            errors.append(f"{self.mt_arrivals} MT arrivals but {self.mt_resolved} outcomes")
        return errors

    def headline(self) -> Dict[str, Any]:
        """Scalar summary used for CSV rows and the run-history store"""
        return {
            'interruption_ms': self.interruption_ms,
            'wasted_paging_units': self.wasted_paging_units,
            'misleading_reachability_events': self.misleading_reachability_events,
            'po_collisions': self.po_collisions,
            'po_collision_fraction': round(self.po_collision_fraction, 6),
            'page_collision_misses': self.page_collision_misses,
            'signaling_units': self.signaling_units,
            'signaling_units_ran': self.signaling_units_ran,
            'signaling_units_cn': self.signaling_units_cn,
            'signaling_units_inter': self.signaling_units_inter,
            'pagings': self.pagings,
            'paging_escalations': self.paging_escalations,
            'paging_busy': self.paging_busy,
            'paging_failures': self.paging_failures,
            'mt_arrivals': self.mt_arrivals,
            'mt_conflicts': self.mt_conflicts,
            'mt_delivered': self.mt_delivered,
            'mt_declined': self.mt_declined,
            'mt_discarded': self.mt_discarded,
            'mt_failed': self.mt_failed,
            'median_latency_ms': self.median_latency_ms,
            'median_conflict_latency_ms': self.median_conflict_latency_ms,
            'median_setup_latency_ms': self.median_setup_latency_ms,
            'mo_blocked': self.mo_blocked,
            'resume_units_per_connection': self.resume_units_per_connection,
            'setup_units_per_connection': self.setup_units_per_connection,
            'mean_leave_latency_ms': self.mean_leave_latency_ms,
            'push_ignored': self.push_ignored,
            'rx_on_ms': self.rx_on_ms,
        }

    def to_dict(self) -> Dict[str, Any]:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                value = list(value)
            elif isinstance(value, dict):
                value = {str(k): v for k, v in sorted(value.items())}
            out[f.name] = value
        return out


def _fold(ledger: MetricsLedger, r: EventRecord, acc: Dict[str, list]):
    d = r.data
    if r.is_message:
        ledger.messages += 1
        ledger.signaling_units += r.size_weight
        if r.segment == 'RAN':
            ledger.signaling_units_ran += r.size_weight
        elif r.segment == 'CN':
            ledger.signaling_units_cn += r.size_weight
        else:
            ledger.signaling_units_inter += r.size_weight
        if r.strategy is not None:
            ledger.strategy_units[r.strategy] = ledger.strategy_units.get(r.strategy, 0) + r.size_weight
        return

    kind = r.kind
    if kind == 'interruption':
        ledger.interruption_us += d.get('duration_us', 0)
    elif kind == 'traffic':
        ledger.discarded_traffic_us += d.get('discarded_us', 0)
        ledger.buffered_traffic_us += d.get('buffered_us', 0)
    elif kind == 'paging_outcome':
        ledger.pagings += 1
        ledger.paging_attempts += d.get('attempts', 0)
        ledger.wasted_paging_units += d.get('wasted_units', 0)
        ledger.paging_escalations += int(bool(d.get('escalated')))
        ledger.paging_busy += int(bool(d.get('busy')))
        ledger.misleading_reachability_events += int(bool(d.get('misleading')))
        if not d.get('responded') and not d.get('busy'):
            ledger.paging_failures += 1
    elif kind == 'page_attempt':
        if d.get('reason') == 'COLLISION':
            ledger.page_collision_misses += 1
    elif kind == 'po_check':
        if d.get('effective', True):
            ledger.po_checks += 1
            ledger.po_collisions += int(bool(d.get('colliding')))
            ledger.po_collision_fraction_sum += d.get('fraction', 0.0)
    elif kind == 'rx_on':
        ledger.rx_on_us += d.get('duration_us', 0)
    elif kind == 'mt_arrival':
        ledger.mt_arrivals += 1
        ledger.mt_conflicts += int(bool(d.get('conflict')))
    elif kind == 'mt_outcome':
        outcome = d.get('outcome')
        if outcome == 'DELIVERED':
            ledger.mt_delivered += 1
            acc['latency'].append(d['latency_us'])
            if d.get('conflict'):
                acc['conflict'].append(d['latency_us'])
            if d.get('setup_us') is not None:
                acc['setup'].append(d['setup_us'])
        elif outcome == 'DECLINED':
            ledger.mt_declined += 1
        elif outcome == 'DISCARDED':
            ledger.mt_discarded += 1
        else:
            ledger.mt_failed += 1
    elif kind == 'mo_start':
        ledger.mo_started += 1
    elif kind == 'mo_blocked':
        ledger.mo_blocked += 1
    elif kind == 'connection':
        if d.get('path') == 'resume':
            ledger.resume_connections += 1
            ledger.resume_units += d.get('units', 0)
        else:
            ledger.setup_connections += 1
            ledger.setup_units += d.get('units', 0)
    elif kind == 'leave':
        ledger.leaves += 1
        acc['leave'].append(d.get('latency_us', 0))
    elif kind == 'notification_received':
        ledger.notifications_received += 1
    elif kind == 'notification_lost':
        ledger.notifications_lost += 1
    elif kind == 'push_ignored':
        ledger.push_ignored += 1
    elif kind == 'radio_conflict':
        ledger.radio_conflicts += 1
    elif kind == 'offset_infeasible':
        ledger.offset_infeasible += 1
    elif kind == 'run_end':
        ledger.runs += 1
        ledger.duration_us += d.get('duration_us', 0)
        ledger.device_us += d.get('devices', 0) * d.get('duration_us', 0)


def compute_ledger(records: Iterable[EventRecord]) -> MetricsLedger:
    """
    Fold an event log into a MetricsLedger

    Args:
        records: Event records in log order (messages and engine records)

    Returns:
        MetricsLedger; an empty log gives the all-zero ledger
    """
    ledger = MetricsLedger()
    acc: Dict[str, list] = {'latency': [], 'conflict': [], 'setup': [], 'leave': []}
    for r in records:
        _fold(ledger, r, acc)
    ledger.mt_latencies_us = tuple(acc['latency'])
    ledger.mt_conflict_latencies_us = tuple(acc['conflict'])
    ledger.mt_setup_latencies_us = tuple(acc['setup'])
    ledger.leave_latencies_us = tuple(acc['leave'])
    return ledger


def merge_ledgers(ledgers: Iterable[MetricsLedger]) -> MetricsLedger:
    total = MetricsLedger()
    for ledger in ledgers:
        total = total.merge(ledger)
    return total
