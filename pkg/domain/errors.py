"""
Exception hierarchy shared by every package
"""
from typing import List, Optional


class SimulationError(Exception):
    """Base class for simulator errors"""


class ConfigInvalidError(SimulationError):
    """CONFIG_INVALID - scenario or stack failed validation"""

    def __init__(self, violations: List[str]):
        self.violations = list(violations)
        super().__init__("Scenario invalid:\n" + "\n".join(f"- {v}" for v in self.violations))


class NotApplicableError(SimulationError):
    """NOT_APPLICABLE - strategy cannot be used in this scenario"""

    def __init__(self, strategy_id: int, reason: str):
        self.strategy_id = strategy_id
        self.reason = reason
        super().__init__(f"Strategy {strategy_id} not applicable: {reason}")


class IllegalTransitionError(SimulationError):
    """ILLEGAL_TRANSITION - state change not allowed by the RRC/MM diagram"""

    def __init__(self, sim_index: int, source: str, target: str, reason: str = ''):
        self.sim_index = sim_index
        self.source = source
        self.target = target
        detail = f" ({reason})" if reason else ''
        super().__init__(f"SIM {sim_index}: illegal transition {source} -> {target}{detail}")


class StateInvariantError(SimulationError):
    """Illegal (cn_state, ran_state) pair or broken profile invariant"""


class PagingFailedError(SimulationError):
    """PAGING_FAILED - all escalation levels exhausted"""

    def __init__(self, outcome, message: Optional[str] = None):
        self.outcome = outcome
        super().__init__(message or "Paging failed after all escalation levels")


class RanPagingFailedError(PagingFailedError):
    """RAN_PAGING_FAILED - RNA paging of an INACTIVE UE got no response"""

    def __init__(self, outcome):
        super().__init__(outcome, "RAN paging failed; UE unavailable")


class NoFeasibleOffsetError(SimulationError):
    """NO_FEASIBLE_OFFSET - occasions too dense for a collision-free offset"""

    def __init__(self, device_id: int, sim_index: int):
        self.device_id = device_id
        self.sim_index = sim_index
        super().__init__(f"No collision-free paging offset for device {device_id} SIM {sim_index}")
