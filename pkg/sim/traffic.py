"""
Traffic model - Poisson MT/MO arrivals per service and session durations
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional
import logging

import numpy as np

from domain.types import ServiceKind, ms_to_us

logger = logging.getLogger(__name__)

US_PER_HOUR = 3_600_000_000

DEFAULT_DURATION_S = {
    ServiceKind.VOICE: 60.0,
    ServiceKind.DATA: 20.0,
    ServiceKind.SMS: 0.2,
    ServiceKind.EMERGENCY: 60.0,
}

# MO traffic that opens a session on the serving SIM
MO_SERVICES = (ServiceKind.VOICE, ServiceKind.DATA, ServiceKind.EMERGENCY)


def _kind_map(data: Optional[Dict], default: Dict[ServiceKind, float]) -> Dict[ServiceKind, float]:
    out = dict(default)
    for key, value in (data or {}).items():
        out[ServiceKind(key)] = float(value)
    return out


@dataclass
class TrafficModel:
    """Per-SIM arrival rates (events per hour) and mean durations (seconds)"""
    mt_rates_per_hour: Dict[ServiceKind, float] = field(default_factory=lambda: {
        ServiceKind.VOICE: 4.0, ServiceKind.SMS: 4.0, ServiceKind.DATA: 4.0, ServiceKind.EMERGENCY: 0.0})
    mo_rates_per_hour: Dict[ServiceKind, float] = field(default_factory=lambda: {
        ServiceKind.VOICE: 4.0, ServiceKind.DATA: 6.0, ServiceKind.EMERGENCY: 0.0})
    mean_duration_s: Dict[ServiceKind, float] = field(default_factory=lambda: dict(DEFAULT_DURATION_S))
    secondary_scale: float = 1.0  # rate multiplier for SECONDARY SIMs

    @classmethod
    def from_dict(cls, data: Optional[Dict]) -> 'TrafficModel':
        data = data or {}
        base = cls()
        return cls(
            mt_rates_per_hour=_kind_map(data.get('mt_rates_per_hour'), base.mt_rates_per_hour),
            mo_rates_per_hour=_kind_map(data.get('mo_rates_per_hour'), base.mo_rates_per_hour),
            mean_duration_s=_kind_map(data.get('mean_duration_s'), base.mean_duration_s),
            secondary_scale=float(data.get('secondary_scale', base.secondary_scale)),
        )

    def to_dict(self) -> Dict:
        return {
            'mt_rates_per_hour': {k.value: v for k, v in self.mt_rates_per_hour.items()},
            'mo_rates_per_hour': {k.value: v for k, v in self.mo_rates_per_hour.items()},
            'mean_duration_s': {k.value: v for k, v in self.mean_duration_s.items()},
            'secondary_scale': self.secondary_scale,
        }

    def validate(self) -> List[str]:
        errors = []
        for name, rates in (('mt', self.mt_rates_per_hour), ('mo', self.mo_rates_per_hour)):
            errors += [f"traffic: {name} rate for {k.value} must be >= 0" for k, v in rates.items() if v < 0]
        errors += [f"traffic: mean duration for {k.value} must be > 0"
                   for k, v in self.mean_duration_s.items() if v <= 0]
        for k in self.mo_rates_per_hour:
            if k not in MO_SERVICES and self.mo_rates_per_hour[k] > 0:
                errors.append(f"traffic: MO {k.value} is not a session service")
        if self.secondary_scale < 0:
            errors.append("traffic: secondary_scale must be >= 0")
        return errors

    def interarrival_us(self, rng: np.random.Generator, rate_per_hour: float) -> Optional[int]:
        """Exponential gap to the next arrival; None for a zero rate"""
        if rate_per_hour <= 0:
            return None
        return max(1, int(rng.exponential(US_PER_HOUR / rate_per_hour)))

    def duration_us(self, rng: np.random.Generator, service: ServiceKind) -> int:
        mean_us = ms_to_us(self.mean_duration_s[service] * 1000)
        if service is ServiceKind.SMS:
            return mean_us
        return max(1, int(rng.exponential(mean_us)))
