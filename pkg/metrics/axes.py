"""
Five comparison axes: complexity, overhead, scalability, latency, energy
"""
from dataclasses import asdict, dataclass
from typing import Dict, Iterable, Optional, Sequence, Tuple
import logging

import numpy as np

from strategies.catalog import descriptor
from .ledger import MetricsLedger

logger = logging.getLogger(__name__)


@dataclass
class AxisScore:
    complexity: float
    overhead: float
    scalability: Optional[float] = None
    latency_ms: Optional[float] = None
    energy_ms_per_hour: float = 0.0

    def to_dict(self) -> Dict[str, Optional[float]]:
        return asdict(self)


def stack_complexity(active: Iterable[int]) -> float:
    """
    Mean complexity of the strategies in a stack

    A strategy's complexity counts its new message kinds plus the node types
    whose handlers change; it never depends on the scenario.
    """
    ids = sorted(set(active))
    if not ids:
        return 0.0
    return float(np.mean([descriptor(sid).complexity for sid in ids]))


def overhead_per_mt(ledger: MetricsLedger) -> float:
    """Signaling units per MT event"""
    return ledger.signaling_units / ledger.mt_arrivals if ledger.mt_arrivals else 0.0


def latency_ms(ledger: MetricsLedger) -> Optional[float]:
    """Median MT setup latency, first page sent to service start"""
    return ledger.median_setup_latency_ms


def energy_ms_per_hour(ledger: MetricsLedger) -> float:
    """Paging-monitoring receiver-on time per device per simulated hour; connected sessions excluded"""
    hours = ledger.device_hours
    return ledger.rx_on_ms / hours if hours > 0 else 0.0


def scalability_slope(points: Sequence[Tuple[float, float]]) -> Optional[float]:
    """
    Least-squares slope of overhead against device count

    Args:
        points: (devices, overhead) pairs from a sweep

    Returns:
        Slope, or None with fewer than two distinct device counts
    """
    if len({x for x, _ in points}) < 2:
        return None
    x = np.array([p[0] for p in points], dtype=float)
    y = np.array([p[1] for p in points], dtype=float)
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)


def axis_scores(ledger: MetricsLedger, active: Iterable[int],
                sweep: Optional[Sequence[Tuple[float, float]]] = None) -> AxisScore:
    return AxisScore(
        complexity=stack_complexity(active),
        overhead=overhead_per_mt(ledger),
        scalability=scalability_slope(sweep) if sweep else None,
        latency_ms=latency_ms(ledger),
        energy_ms_per_hour=energy_ms_per_hour(ledger),
    )
