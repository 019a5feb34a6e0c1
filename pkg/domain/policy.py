"""
User policy table - decides what the device does with a service arriving on one SIM
while it is busy on another
"""
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Union
import logging

from .types import Activity, PolicyAction, ServiceKind, ServiceType

logger = logging.getLogger(__name__)

WILDCARD = '*'


@dataclass(frozen=True)
class PolicyRule:
    """(incoming service, current activity) -> action; None matches anything"""
    service: Optional[ServiceKind]
    activity: Optional[Activity]
    action: PolicyAction

    @property
    def is_catch_all(self) -> bool:
        return self.service is None and self.activity is None

    def matches(self, incoming: Optional[ServiceKind], activity: Activity) -> bool:
        # An unknown incoming service (no paging cause) only matches wildcard rules
        if self.service is not None and self.service is not incoming:
            return False
        if self.activity is not None and self.activity is not activity:
            return False
        return True

    def to_dict(self) -> Dict[str, str]:
        return {
            'service': self.service.value if self.service else WILDCARD,
            'activity': self.activity.value if self.activity else WILDCARD,
            'action': self.action.value,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, str]) -> 'PolicyRule':
        service = data.get('service', WILDCARD)
        activity = data.get('activity', WILDCARD)
        return cls(
            service=None if service == WILDCARD else ServiceKind(service),
            activity=None if activity == WILDCARD else Activity(activity),
            action=PolicyAction(data['action']),
        )


@dataclass(frozen=True)
class PolicyTable:
    rules: tuple

    def __init__(self, rules: Iterable[PolicyRule]):
        object.__setattr__(self, 'rules', tuple(rules))

    def validate(self) -> List[str]:
        errors = []
        if not self.rules:
            errors.append("policy table is empty")
        elif not any(r.is_catch_all for r in self.rules):
            errors.append("policy table needs a catch-all rule")
        return errors

    def to_list(self) -> List[Dict[str, str]]:
        return [r.to_dict() for r in self.rules]

    @classmethod
    def from_list(cls, data: List[Dict[str, str]]) -> 'PolicyTable':
        return cls(PolicyRule.from_dict(d) for d in data)


def match_policy(policy: PolicyTable, incoming: Union[ServiceType, ServiceKind, None],
                 activity: Activity) -> PolicyAction:
    """
    Return the action of the first matching rule

    Args:
        policy: Ordered rule table with a catch-all
        incoming: Arriving service, or None when the page carries no cause
        activity: What the device is doing on the serving SIM

    Returns:
        PolicyAction of the first rule that matches
    """
    kind = incoming.kind if isinstance(incoming, ServiceType) else incoming
    for rule in policy.rules:
        if rule.matches(kind, activity):
            return rule.action
    # validate() guarantees a catch-all; reaching here means an unvalidated table
    raise ValueError("policy table has no matching rule (missing catch-all)")


def default_policy() -> PolicyTable:
    """Accept everything; reject a second voice call during a voice call"""
    return PolicyTable([
        PolicyRule(ServiceKind.EMERGENCY, None, PolicyAction.ACCEPT_LEAVE),
        PolicyRule(ServiceKind.VOICE, Activity.VOICE_CALL, PolicyAction.REJECT_BUSY),
        PolicyRule(ServiceKind.SMS, None, PolicyAction.NOTIFY_ONLY),
        PolicyRule(None, None, PolicyAction.ACCEPT_LEAVE),
    ])
