"""
Network topology: cells, tracking areas, registration areas and RAN notification areas
"""
from dataclasses import dataclass, field
from typing import FrozenSet, Iterable, List, Tuple
import logging

from domain.types import Generation, core_node, ran_node
from paging.occasions import PagingConfig

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TopologyModel:
    """
    Ring of tracking areas, each holding a fixed number of cells

    TAs are grouped into registration areas (5G) in index order. TA lists and
    RNAs are the TA of the camped cell plus a ring of neighbours.
    """
    num_tas: int = 8
    cells_per_ta: int = 4
    tas_per_raa: int = 4
    ta_list_radius: int = 1
    rna_radius: int = 0

    @property
    def num_cells(self) -> int:
        return self.num_tas * self.cells_per_ta

    @property
    def cells(self) -> List[Tuple[int, int]]:
        """(cell_id, ta_id) for every cell"""
        return [(c, self.ta_of(c)) for c in range(self.num_cells)]

    def ta_of(self, cell: int) -> int:
        return cell // self.cells_per_ta

    def raa_of(self, ta: int) -> int:
        return ta // self.tas_per_raa

    def cells_of_tas(self, tas: Iterable[int]) -> FrozenSet[int]:
        return frozenset(c for ta in tas for c in range(ta * self.cells_per_ta, (ta + 1) * self.cells_per_ta))

    def _ring(self, ta: int, radius: int) -> FrozenSet[int]:
        if 2 * radius + 1 >= self.num_tas:
            return frozenset(range(self.num_tas))
        return frozenset((ta + d) % self.num_tas for d in range(-radius, radius + 1))

    def ta_list_around(self, ta: int) -> FrozenSet[int]:
        return self._ring(ta, self.ta_list_radius)

    def rna_cells(self, ta: int) -> FrozenSet[int]:
        return self.cells_of_tas(self._ring(ta, self.rna_radius))

    def registration_area_cells(self, ta_list: Iterable[int], generation: Generation) -> FrozenSet[int]:
        """Widest paging scope: whole network in 4G, the RAAs covering the TA list in 5G"""
        if generation is Generation.G4:
            return frozenset(range(self.num_cells))
        raas = {self.raa_of(ta) for ta in ta_list}
        return self.cells_of_tas(ta for ta in range(self.num_tas) if self.raa_of(ta) in raas)

    def cell_at(self, position: int, positions: int) -> int:
        """Map a device position on the shared mobility ring onto this network's cells"""
        return (position % positions) * self.num_cells // positions

    def validate(self, generation: Generation) -> List[str]:
        errors = []
        if self.num_tas < 1 or self.cells_per_ta < 1:
            errors.append("topology needs at least one TA with one cell")
        if generation is Generation.G5 and self.tas_per_raa < 1:
            errors.append("5G topology: every TA must belong to a registration area")
        if self.ta_list_radius < 0 or self.rna_radius < 0:
            errors.append("ta_list_radius and rna_radius must be >= 0")
        elif generation is Generation.G5 and self.rna_radius > self.ta_list_radius:
            errors.append("RNA must stay inside the registration area (rna_radius <= ta_list_radius)")
        return errors


@dataclass
class NetworkModel:
    """One PLMN as seen by the simulator"""
    name: str
    plmn_id: int
    generation: Generation
    topology: TopologyModel = field(default_factory=TopologyModel)
    paging: PagingConfig = field(default_factory=PagingConfig)
    mno: str = ''

    @property
    def ran_node(self) -> str:
        return ran_node(self.name, self.generation)

    @property
    def core_node(self) -> str:
        return core_node(self.name, self.generation)

    @property
    def is_5g(self) -> bool:
        return self.generation is Generation.G5

    def validate(self) -> List[str]:
        errors = [f"network {self.name}: {e}" for e in self.topology.validate(self.generation)]
        errors += [f"network {self.name}: {e}" for e in self.paging.validate()]
        return errors
