#!/usr/bin/env python3
"""
Domain vocabulary tests - services, messages, states, policy and identities
"""
import sys
import importlib
import logging
sys.path.insert(0, '.')

import numpy as np
import pytest
from hypothesis import given, strategies as st

import config
from domain.errors import StateInvariantError
from domain.identity import IMSI_MAX, IMSI_MIN, draw_imsi, regenerate_temporal_ids
from domain.policy import PolicyRule, PolicyTable, default_policy, match_policy
from domain.types import (
    PAGED_SETUP_SEQUENCE, RESUME_SEQUENCE, SETUP_SEQUENCE,
    Activity, CnState, DeviceMode, Generation, LinkDelays, MsgKind, Plane, PolicyAction, RanState,
    ServiceKind, SimProfile, UeDevice, UeIdentity, make_message, message_weight, sequence_weight,
    service_catalog,
)

logger = logging.getLogger(__name__)


def _profile(generation=Generation.G5, **kwargs) -> SimProfile:
    sim = SimProfile(sim_index=0, plmn_id=1, generation=generation, identity=UeIdentity(imsi=IMSI_MIN))
    sim.cn_state = CnState.IDLE
    sim.ta_list = {0}
    for key, value in kwargs.items():
        setattr(sim, key, value)
    return sim


def test_config_defaults_are_valid():
    config.validate_config()
    assert all(1 <= s <= 14 for s in config.COMPARE_RAN_STACK + config.COMPARE_CN_STACK)


def test_bad_env_value_is_logged_on_import(monkeypatch, caplog):
    monkeypatch.setenv('WORKERS', '0')
    try:
        with caplog.at_level(logging.WARNING, logger='config'):
            importlib.reload(config)
        assert config.WORKERS == 0
        assert any('WORKERS must be >= 1' in r.getMessage() for r in caplog.records)
        with pytest.raises(ValueError):
            config.validate_config()
    finally:
        monkeypatch.delenv('WORKERS')
        importlib.reload(config)
    assert config.WORKERS >= 1


def test_service_catalog_priorities():
    catalog = service_catalog()
    assert catalog[ServiceKind.EMERGENCY].priority > catalog[ServiceKind.VOICE].priority
    assert catalog[ServiceKind.VOICE].priority > catalog[ServiceKind.SMS].priority
    assert catalog[ServiceKind.SMS].priority > catalog[ServiceKind.DATA].priority
    assert catalog[ServiceKind.SMS].plane is Plane.CONTROL
    assert catalog[ServiceKind.VOICE].plane is Plane.USER
    logger.info("✓ default priorities are strictly ordered")


def test_service_catalog_rejects_broken_order():
    with pytest.raises(ValueError):
        service_catalog({ServiceKind.DATA: 10})


def test_message_weights_follow_stratum():
    assert message_weight(MsgKind.PageRan) == 1
    assert message_weight(MsgKind.PageCn) == 2
    assert message_weight(MsgKind.PushNotification) == 3
    assert message_weight(MsgKind.BusyIndication) == 2


def test_resume_is_cheaper_than_setup():
    assert sequence_weight(SETUP_SEQUENCE) == 6
    assert sequence_weight(PAGED_SETUP_SEQUENCE) == 6
    assert sequence_weight(RESUME_SEQUENCE) == 3
    delays = LinkDelays()
    assert delays.sequence_us(RESUME_SEQUENCE) < delays.sequence_us(SETUP_SEQUENCE)


def test_make_message_applies_link_delay():
    delays = LinkDelays.from_ms(2, 10, 30)
    msg = make_message(MsgKind.PageCn, 'amf:a', 'ue:0', 0, 0, 1_000, delays, paging_cause=ServiceKind.VOICE)
    assert msg.delivered_us == 11_000
    assert msg.size_weight == 2
    assert msg.segment.value == 'CN'


def test_paging_cause_only_on_paging_messages():
    with pytest.raises(ValueError):
        make_message(MsgKind.RrcSetup, 'gnb:a', 'ue:0', 0, 0, 0, LinkDelays(), paging_cause=ServiceKind.SMS)


def test_state_invariants():
    _profile().check_states()
    with pytest.raises(StateInvariantError):
        _profile(Generation.G4, cn_state=CnState.CONNECTED, ran_state=RanState.INACTIVE).check_states()
    with pytest.raises(StateInvariantError):
        _profile(cn_state=CnState.IDLE, ran_state=RanState.CONNECTED).check_states()
    with pytest.raises(StateInvariantError):
        _profile(current_ta=3).check_states()


def test_profile_state_names():
    assert _profile().state_name == 'IDLE'
    assert _profile(cn_state=CnState.CONNECTED, ran_state=RanState.INACTIVE).state_name == 'INACTIVE'
    assert _profile(cn_state=CnState.DEREGISTERED).state_name == 'DEREGISTERED'


def test_device_validation():
    sims = [_profile(), _profile()]
    assert UeDevice(0, sims).validate() == []
    errors = UeDevice(0, sims, num_rx=1, mode=DeviceMode.DSDA).validate()
    assert any('DSDA' in e for e in errors)
    assert UeDevice(0, sims[:1]).validate()


def test_default_policy():
    policy = default_policy()
    assert policy.validate() == []
    assert match_policy(policy, ServiceKind.VOICE, Activity.VOICE_CALL) is PolicyAction.REJECT_BUSY
    assert match_policy(policy, ServiceKind.VOICE, Activity.DATA_SESSION) is PolicyAction.ACCEPT_LEAVE
    assert match_policy(policy, ServiceKind.SMS, Activity.VOICE_CALL) is PolicyAction.NOTIFY_ONLY
    # a page without a cause only matches wildcard rules
    assert match_policy(policy, None, Activity.VOICE_CALL) is PolicyAction.ACCEPT_LEAVE


def test_policy_first_match_wins():
    policy = PolicyTable.from_list([
        {'service': 'DATA', 'activity': '*', 'action': 'IGNORE'},
        {'service': '*', 'activity': '*', 'action': 'REJECT_BUSY'},
    ])
    assert match_policy(policy, ServiceKind.DATA, Activity.IDLE) is PolicyAction.IGNORE
    assert match_policy(policy, ServiceKind.VOICE, Activity.IDLE) is PolicyAction.REJECT_BUSY
    assert policy.to_list()[0] == {'service': 'DATA', 'activity': '*', 'action': 'IGNORE'}


def test_policy_needs_catch_all():
    table = PolicyTable([PolicyRule(ServiceKind.VOICE, None, PolicyAction.ACCEPT_LEAVE)])
    assert table.validate()
    assert PolicyTable([]).validate()


@given(st.integers(min_value=0, max_value=2 ** 32))
def test_identity_refresh_keeps_imsi(seed):
    rng = np.random.default_rng(seed)
    imsi = draw_imsi(rng)
    assert IMSI_MIN <= imsi < IMSI_MAX
    identity = regenerate_temporal_ids(UeIdentity(imsi=imsi), rng)
    assert identity.imsi == imsi
    assert 0 <= identity.temporal_cn_id < 2 ** 32
    assert 0 <= identity.temporal_ran_id < 2 ** 32


if __name__ == '__main__':
    sys.exit(pytest.main([__file__, '-v']))
