"""
Radio arbiter - Rx/Tx reservations of one device
"""
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Union
import logging

from domain.types import NEVER

logger = logging.getLogger(__name__)


class Resource(Enum):
    RX = "RX"
    TX = "TX"


@dataclass
class Reservation:
    resource: Resource
    sim_index: int
    start_us: int
    end_us: int = NEVER
    purpose: str = ''

    def overlaps(self, start_us: int, end_us: int) -> bool:
        return self.start_us < end_us and start_us < self.end_us


@dataclass(frozen=True)
class Grant:
    reservation: Reservation


@dataclass(frozen=True)
class Conflict:
    blocked_by: Reservation


class RadioArbiter:
    """
    Per-device transceiver budget

    A request is granted when, counting the requesting SIM, no more distinct SIMs
    than the budget hold the resource over the interval. With a single shared
    transceiver the interval is padded by the switch delay on both sides.
    """

    def __init__(self, device_id: int, num_rx: int, num_tx: int, switch_delay_us: int):
        self.device_id = device_id
        self.budget = {Resource.RX: num_rx, Resource.TX: num_tx}
        self.switch_delay_us = switch_delay_us
        self.reservations: List[Reservation] = []

    def _blocking(self, resource: Resource, sim_index: int, start_us: int, end_us: int) -> List[Reservation]:
        pad = self.switch_delay_us if self.budget[resource] == 1 else 0
        lo = start_us - pad
        hi = end_us + pad if end_us < NEVER else NEVER
        return [r for r in self.reservations
                if r.resource is resource and r.sim_index != sim_index and r.overlaps(lo, hi)]

    def reserve(self, resource: Resource, sim_index: int, start_us: int, end_us: int = NEVER,
                purpose: str = '') -> Union[Grant, Conflict]:
        """
        Request a resource for [start, end)

        Returns:
            Grant with the stored reservation, or Conflict naming a blocking reservation
        """
        blocking = self._blocking(resource, sim_index, start_us, end_us)
        holders = {r.sim_index for r in blocking}
        if len(holders) + 1 > self.budget[resource]:
            logger.debug(f"[Radio] device={self.device_id} {resource.value} for sim {sim_index} "
                         f"blocked by sim {blocking[0].sim_index}")
            return Conflict(blocking[0])
        reservation = Reservation(resource, sim_index, start_us, end_us, purpose)
        self.reservations.append(reservation)
        return Grant(reservation)

    def reserve_both(self, sim_index: int, start_us: int, end_us: int = NEVER,
                     purpose: str = '') -> Optional[Conflict]:
        """Rx and Tx together; nothing is kept when either one conflicts"""
        rx = self.reserve(Resource.RX, sim_index, start_us, end_us, purpose)
        if isinstance(rx, Conflict):
            return rx
        tx = self.reserve(Resource.TX, sim_index, start_us, end_us, purpose)
        if isinstance(tx, Conflict):
            self.reservations.remove(rx.reservation)
            return tx
        return None

    def release(self, sim_index: int, at_us: int, resource: Optional[Resource] = None):
        """Close every reservation of the SIM still running at at_us"""
        for r in list(self.reservations):
            if r.sim_index != sim_index or (resource is not None and r.resource is not resource):
                continue
            if r.end_us > at_us:
                if r.start_us >= at_us:
                    self.reservations.remove(r)
                else:
                    r.end_us = at_us

    def carve(self, sim_index: int, start_us: int, end_us: int):
        """Cut [start, end) out of the SIM's reservations (tune-away windows)"""
        for r in list(self.reservations):
            if r.sim_index != sim_index or not r.overlaps(start_us, end_us):
                continue
            self.reservations.remove(r)
            if r.start_us < start_us:
                self.reservations.append(Reservation(r.resource, sim_index, r.start_us, start_us, r.purpose))
            if r.end_us > end_us:
                self.reservations.append(Reservation(r.resource, sim_index, end_us, r.end_us, r.purpose))

    def holds(self, resource: Resource, sim_index: int, t_us: int) -> bool:
        return any(r.resource is resource and r.sim_index == sim_index and r.start_us <= t_us < r.end_us
                   for r in self.reservations)

    def finalize(self, end_us: int) -> List[Reservation]:
        """Close open reservations at end_us and return all, ordered by start"""
        for r in self.reservations:
            if r.end_us > end_us:
                r.end_us = max(end_us, r.start_us)
        return sorted((r for r in self.reservations if r.end_us > r.start_us),
                      key=lambda r: (r.start_us, r.sim_index, r.resource.value))
