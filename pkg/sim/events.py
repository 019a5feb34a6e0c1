"""
Event queue and the structured event-record stream
"""
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterable, List, Optional
import hashlib
import heapq
import json
import logging

from domain.types import SimMessage

logger = logging.getLogger(__name__)


@dataclass(order=True)
class Event:
    time_us: int
    seq: int
    kind: str = field(compare=False)
    handler: Callable = field(compare=False, repr=False)
    args: tuple = field(compare=False, default=(), repr=False)


class EventQueue:
    """Min-heap of events popped in (time, seq) order"""

    def __init__(self):
        self._heap: List[Event] = []
        self._seq = 0

    def push(self, time_us: int, kind: str, handler: Callable, *args) -> Event:
        event = Event(int(time_us), self._seq, kind, handler, args)
        self._seq += 1
        heapq.heappush(self._heap, event)
        return event

    def pop(self) -> Event:
        return heapq.heappop(self._heap)

    def peek_time(self) -> Optional[int]:
        return self._heap[0].time_us if self._heap else None

    def __len__(self) -> int:
        return len(self._heap)


@dataclass(frozen=True)
class EventRecord:
    """One line of the event log; messages carry a segment and a size weight"""
    time_us: int
    kind: str
    node: str = ''
    device: Optional[int] = None
    sim: Optional[int] = None
    strategy: Optional[int] = None
    size_weight: int = 0
    segment: Optional[str] = None
    data: Dict[str, Any] = field(default_factory=dict)

    @property
    def is_message(self) -> bool:
        return self.segment is not None

    def to_dict(self) -> Dict[str, Any]:
        return {
            'time_us': self.time_us,
            'kind': self.kind,
            'node': self.node,
            'device': self.device,
            'sim': self.sim,
            'strategy': self.strategy,
            'size_weight': self.size_weight,
            'segment': self.segment,
            'data': self.data,
        }

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> 'EventRecord':
        return cls(
            time_us=d['time_us'], kind=d['kind'], node=d.get('node', ''),
            device=d.get('device'), sim=d.get('sim'), strategy=d.get('strategy'),
            size_weight=d.get('size_weight', 0), segment=d.get('segment'),
            data=d.get('data') or {},
        )

    @classmethod
    def from_message(cls, msg: SimMessage) -> 'EventRecord':
        data = {'destination': msg.destination, 'delivered_us': msg.delivered_us}
        if msg.service is not None:
            data['service'] = msg.service.value
        if msg.paging_cause is not None:
            data['paging_cause'] = msg.paging_cause.value
        return cls(
            time_us=msg.timestamp_us, kind=msg.kind.value, node=msg.origin,
            device=msg.device_id, sim=msg.sim_index, strategy=msg.strategy,
            size_weight=msg.size_weight, segment=msg.segment.value, data=data,
        )


def to_ndjson_lines(records: Iterable[EventRecord]) -> List[str]:
    return [json.dumps(r.to_dict(), sort_keys=True, separators=(',', ':')) for r in records]


def log_digest(records: Iterable[EventRecord]) -> str:
    """SHA-256 over the NDJSON rendering of the log"""
    h = hashlib.sha256()
    for line in to_ndjson_lines(records):
        h.update(line.encode('utf-8'))
        h.update(b'\n')
    return h.hexdigest()


def read_ndjson(path: str) -> List[EventRecord]:
    with open(path, 'r', encoding='utf-8') as f:
        return [EventRecord.from_dict(json.loads(line)) for line in f if line.strip()]
