"""
Scenario files: parsing, overrides, validation and classification
"""
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Union
import copy
import json
import logging

import config
from domain.errors import ConfigInvalidError
from domain.policy import PolicyTable, default_policy
from domain.types import DeviceMode, Generation, LinkDelays, ServiceKind, ms_to_us
from mobility.topology import NetworkModel, TopologyModel
from paging.occasions import PagingConfig, ScopeLevel
from sim.traffic import TrafficModel
from strategies.catalog import StrategyParams, StrategyStack

logger = logging.getLogger(__name__)


@dataclass
class DeviceSpec:
    count: int = 20
    num_rx: int = 1
    mode: DeviceMode = DeviceMode.DSDS
    switch_delay_ms: float = field(default_factory=lambda: config.SWITCH_DELAY_MS)
    sim_networks: List[int] = field(default_factory=lambda: [0, 1])  # network index per SIM
    policy: PolicyTable = field(default_factory=default_policy)

    @property
    def switch_delay_us(self) -> int:
        return ms_to_us(self.switch_delay_ms)


@dataclass
class MobilitySpec:
    dwell_mean_s: float = 120.0  # 0 = static devices
    positions: Optional[int] = None  # shared mobility ring; default = largest cell count

    @property
    def dwell_mean_us(self) -> int:
        return ms_to_us(self.dwell_mean_s * 1000)


@dataclass
class Scenario:
    """One experiment: networks, devices, workload and strategy stack"""
    scenario_id: str
    networks: List[NetworkModel]
    devices: DeviceSpec = field(default_factory=DeviceSpec)
    traffic: TrafficModel = field(default_factory=TrafficModel)
    mobility: MobilitySpec = field(default_factory=MobilitySpec)
    strategies: StrategyStack = field(default_factory=StrategyStack)
    horizon_s: float = 600.0
    seed: int = 1
    replications: int = 1
    refresh_period_s: Optional[float] = None  # temporal-id refresh; None = never
    n3iwf_registered: bool = True
    inter_operator_link: bool = True
    page_loss_probability: float = 0.0
    as_delay_ms: float = field(default_factory=lambda: config.AS_DELAY_MS)
    nas_delay_ms: float = field(default_factory=lambda: config.NAS_DELAY_MS)
    inter_plmn_delay_ms: float = field(default_factory=lambda: config.INTER_PLMN_DELAY_MS)
    page_retry_interval_ms: float = field(default_factory=lambda: config.PAGE_RETRY_INTERVAL_MS)
    rlf_timeout_ms: float = field(default_factory=lambda: config.RLF_TIMEOUT_MS)
    inactive_to_idle_s: float = field(default_factory=lambda: config.INACTIVE_TO_IDLE_S)
    ran_failure_fallback_to_cn: bool = field(default_factory=lambda: config.RAN_FAILURE_FALLBACK_TO_CN)

    @property
    def delays(self) -> LinkDelays:
        return LinkDelays.from_ms(self.as_delay_ms, self.nas_delay_ms, self.inter_plmn_delay_ms)

    @property
    def horizon_us(self) -> int:
        return ms_to_us(self.horizon_s * 1000)

    @property
    def sim_networks(self) -> List[NetworkModel]:
        return [self.networks[i] for i in self.devices.sim_networks
                if isinstance(i, int) and 0 <= i < len(self.networks)]

    @property
    def generations(self) -> List[Generation]:
        return [n.generation for n in self.sim_networks]

    @property
    def positions(self) -> int:
        if self.mobility.positions:
            return self.mobility.positions
        return max(n.topology.num_cells for n in self.networks)

    def with_stack(self, active: Sequence[int], params: Optional[StrategyParams] = None) -> 'Scenario':
        out = copy.deepcopy(self)
        out.strategies = StrategyStack(tuple(active), params or copy.deepcopy(self.strategies.params))
        return out

    # ------------------------------------------------------------------ validation

    def validate(self) -> List[str]:
        errors = []
        if not self.networks:
            errors.append("at least one network is required")
        for net in self.networks:
            errors += net.validate()
        dev = self.devices
        if dev.count < 1:
            errors.append("devices.count must be >= 1")
        if dev.num_rx not in (1, 2):
            errors.append("devices.num_rx must be 1 or 2")
        if dev.mode is DeviceMode.DSDA and dev.num_rx < 2:
            errors.append("DSDA devices need num_rx = 2")
        if dev.switch_delay_ms < 0:
            errors.append("devices.switch_delay_ms must be >= 0")
        if len(dev.sim_networks) < 2:
            errors.append("devices.sim_networks must list at least 2 SIMs")
        for i in dev.sim_networks:
            if not isinstance(i, int) or not 0 <= i < len(self.networks):
                errors.append(f"devices.sim_networks: no network with index {i}")
        errors += dev.policy.validate()
        errors += self.traffic.validate()
        if self.mobility.dwell_mean_s < 0:
            errors.append("mobility.dwell_mean_s must be >= 0")
        if self.horizon_s <= 0:
            errors.append("horizon_s must be > 0")
        if self.replications < 1:
            errors.append("replications must be >= 1")
        if self.refresh_period_s is not None and self.refresh_period_s <= 0:
            errors.append("refresh_period_s must be > 0 when set")
        if not 0.0 <= self.page_loss_probability < 1.0:
            errors.append("page_loss_probability must lie in [0, 1)")
        for name in ('as_delay_ms', 'nas_delay_ms', 'inter_plmn_delay_ms', 'rlf_timeout_ms'):
            if getattr(self, name) < 0:
                errors.append(f"{name} must be >= 0")
        if self.page_retry_interval_ms <= 0 or self.inactive_to_idle_s <= 0:
            errors.append("page_retry_interval_ms and inactive_to_idle_s must be > 0")
        if self.sim_networks:
            errors += self.strategies.validate(self.generations, self.n3iwf_registered, self.inter_operator_link)
        return errors

    def classify(self) -> Dict[str, str]:
        """Position of the scenario in each multi-SIM challenge dimension"""
        nets = self.sim_networks
        gens = sorted((n.generation.value for n in nets), reverse=True)
        services = [k.value for k, v in self.traffic.mt_rates_per_hour.items() if v > 0]
        services += [k.value for k, v in self.traffic.mo_rates_per_hour.items() if v > 0 and k.value not in services]
        return {
            'cn_connection': '+'.join(gens),
            'ue_configuration': f"{'single' if self.devices.num_rx < 2 else 'dual'}-rx {self.devices.mode.value}",
            'mno_configuration': 'same MNO' if len({n.mno or n.name for n in nets}) == 1 else 'different MNOs',
            'cell_camping': 'same PLMN' if len({n.plmn_id for n in nets}) == 1 else 'different PLMNs',
            'services': ','.join(sorted(services)) or 'none',
        }

    # ------------------------------------------------------------------ (de)serialization

    def to_dict(self) -> Dict[str, Any]:
        return {
            'scenario_id': self.scenario_id,
            'networks': [_network_to_dict(n) for n in self.networks],
            'devices': {
                'count': self.devices.count,
                'num_rx': self.devices.num_rx,
                'mode': self.devices.mode.value,
                'switch_delay_ms': self.devices.switch_delay_ms,
                'sim_networks': list(self.devices.sim_networks),
                'policy': self.devices.policy.to_list(),
            },
            'traffic': self.traffic.to_dict(),
            'mobility': {'dwell_mean_s': self.mobility.dwell_mean_s, 'positions': self.mobility.positions},
            'strategies': list(self.strategies.active),
            'strategy_params': self.strategies.params.to_dict(),
            'horizon_s': self.horizon_s,
            'seed': self.seed,
            'replications': self.replications,
            'refresh_period_s': self.refresh_period_s,
            'n3iwf_registered': self.n3iwf_registered,
            'inter_operator_link': self.inter_operator_link,
            'page_loss_probability': self.page_loss_probability,
            'as_delay_ms': self.as_delay_ms,
            'nas_delay_ms': self.nas_delay_ms,
            'inter_plmn_delay_ms': self.inter_plmn_delay_ms,
            'page_retry_interval_ms': self.page_retry_interval_ms,
            'rlf_timeout_ms': self.rlf_timeout_ms,
            'inactive_to_idle_s': self.inactive_to_idle_s,
            'ran_failure_fallback_to_cn': self.ran_failure_fallback_to_cn,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Scenario':
        """Build a scenario; malformed entries raise ConfigInvalidError"""
        try:
            return _scenario_from_dict(data)
        except ConfigInvalidError:
            raise
        except (KeyError, ValueError, TypeError) as e:
            raise ConfigInvalidError([f"malformed scenario: {e!r}"]) from e


_SCALARS = ('horizon_s', 'seed', 'replications', 'refresh_period_s', 'n3iwf_registered',
            'inter_operator_link', 'page_loss_probability', 'as_delay_ms', 'nas_delay_ms',
            'inter_plmn_delay_ms', 'page_retry_interval_ms', 'rlf_timeout_ms', 'inactive_to_idle_s',
            'ran_failure_fallback_to_cn')


def _network_to_dict(net: NetworkModel) -> Dict[str, Any]:
    topo, pg = net.topology, net.paging
    return {
        'name': net.name,
        'plmn_id': net.plmn_id,
        'generation': net.generation.value,
        'mno': net.mno,
        'topology': {
            'num_tas': topo.num_tas, 'cells_per_ta': topo.cells_per_ta, 'tas_per_raa': topo.tas_per_raa,
            'ta_list_radius': topo.ta_list_radius, 'rna_radius': topo.rna_radius,
        },
        'paging': {
            'drx_cycle': pg.drx_cycle,
            'occasions_per_frame': pg.occasions_per_frame,
            'frame_duration_ms': pg.frame_duration_us / 1000,
            'frame_offset_ms': pg.frame_offset_us / 1000,
            'max_attempts': pg.max_attempts,
            'escalation_levels': [lvl.value for lvl in pg.escalation_levels],
        },
    }


def _network_from_dict(d: Dict[str, Any], index: int) -> NetworkModel:
    pg = d.get('paging') or {}
    base = PagingConfig.from_config()
    paging = PagingConfig(
        drx_cycle=int(pg.get('drx_cycle', base.drx_cycle)),
        occasions_per_frame=int(pg.get('occasions_per_frame', base.occasions_per_frame)),
        frame_duration_us=ms_to_us(pg['frame_duration_ms']) if 'frame_duration_ms' in pg else base.frame_duration_us,
        frame_offset_us=ms_to_us(pg.get('frame_offset_ms', 0)),
        max_attempts=int(pg.get('max_attempts', base.max_attempts)),
        escalation_levels=tuple(ScopeLevel(v) for v in pg['escalation_levels'])
        if 'escalation_levels' in pg else base.escalation_levels,
    )
    return NetworkModel(
        name=str(d.get('name', f"net{index}")),
        plmn_id=int(d.get('plmn_id', index + 1)),
        generation=Generation(d.get('generation', '5G')),
        topology=TopologyModel(**(d.get('topology') or {})),
        paging=paging,
        mno=str(d.get('mno', '')),
    )


def _scenario_from_dict(data: Dict[str, Any]) -> 'Scenario':
    networks = [_network_from_dict(d, i) for i, d in enumerate(data.get('networks') or [])]
    dv = data.get('devices') or {}
    base_dev = DeviceSpec()
    devices = DeviceSpec(
        count=int(dv.get('count', base_dev.count)),
        num_rx=int(dv.get('num_rx', base_dev.num_rx)),
        mode=DeviceMode(dv.get('mode', base_dev.mode.value)),
        switch_delay_ms=float(dv.get('switch_delay_ms', base_dev.switch_delay_ms)),
        sim_networks=list(dv.get('sim_networks', base_dev.sim_networks)),
        policy=PolicyTable.from_list(dv['policy']) if 'policy' in dv else default_policy(),
    )
    mb = data.get('mobility') or {}
    mobility = MobilitySpec(dwell_mean_s=float(mb.get('dwell_mean_s', 120.0)), positions=mb.get('positions'))
    stack = StrategyStack(
        active=tuple(int(s) for s in data.get('strategies') or ()),
        params=StrategyParams.from_dict(data.get('strategy_params')),
    )
    kwargs = {k: data[k] for k in _SCALARS if k in data}
    return Scenario(
        scenario_id=str(data.get('scenario_id', 'scenario')),
        networks=networks,
        devices=devices,
        traffic=TrafficModel.from_dict(data.get('traffic')),
        mobility=mobility,
        strategies=stack,
        **kwargs,
    )


# ---------------------------------------------------------------------- overrides

def parse_override(item: str):
    """'a.b.c=value' -> (['a','b','c'], value); values are JSON when they parse, else strings"""
    if '=' not in item:
        raise ConfigInvalidError([f"override '{item}' is not key=value"])
    key, raw = item.split('=', 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip().split('.'), value


def apply_overrides(data: Dict[str, Any], overrides: Sequence[str]) -> Dict[str, Any]:
    """Apply --set overrides to a raw scenario dict; list elements are addressed by index"""
    out = copy.deepcopy(data)
    for item in overrides or ():
        path, value = parse_override(item)
        node = out
        for part in path[:-1]:
            if isinstance(node, list):
                node = node[int(part)]
            else:
                node = node.setdefault(part, {})
        last = path[-1]
        if isinstance(node, list):
            node[int(last)] = value
        else:
            node[last] = value
    return out


# ---------------------------------------------------------------------- files

def load_scenario_dict(path: str) -> Dict[str, Any]:
    try:
        with open(path, 'r', encoding='utf-8') as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigInvalidError([f"cannot read scenario {path}: {e}"]) from e


def load_scenario(path_or_data: Union[str, Dict[str, Any]], overrides: Sequence[str] = ()) -> Scenario:
    """
    Read, override and validate a scenario

    Raises:
        ConfigInvalidError: with every failed validation rule
    """
    data = load_scenario_dict(path_or_data) if isinstance(path_or_data, str) else path_or_data
    scenario = Scenario.from_dict(apply_overrides(data, overrides))
    violations = scenario.validate()
    if violations:
        raise ConfigInvalidError(violations)
    logger.info(f"[Scenario] {scenario.scenario_id}: {scenario.classify()} stack={scenario.strategies.label}")
    return scenario


def validate_scenario(path_or_data: Union[str, Dict[str, Any]],
                      overrides: Sequence[str] = ()) -> Union[Scenario, List[str]]:
    """The scenario when valid, otherwise the list of violations"""
    try:
        return load_scenario(path_or_data, overrides)
    except ConfigInvalidError as e:
        return e.violations


# ---------------------------------------------------------------------- programmatic builder

def build_scenario(scenario_id: str = 'test', generations: Sequence[str] = ('5G', '5G'),
                   same_plmn: bool = False, same_mno: bool = False, devices: int = 4,
                   num_rx: int = 1, mode: str = 'DSDS', strategies: Sequence[int] = (),
                   params: Optional[Dict[str, Any]] = None, horizon_s: float = 120.0, seed: int = 1,
                   mt_rates: Optional[Dict[str, float]] = None, mo_rates: Optional[Dict[str, float]] = None,
                   durations: Optional[Dict[str, float]] = None, dwell_mean_s: float = 0.0,
                   frame_offsets_ms: Sequence[float] = (), policy: Optional[List[Dict[str, str]]] = None,
                   **extra) -> Scenario:
    """Small in-code scenario for tests and quick experiments; extra keys go to the top level"""
    networks = []
    for i, gen in enumerate(generations):
        networks.append({
            'name': f"{'op' if not same_plmn else 'shared'}{0 if same_plmn else i}",
            'plmn_id': 1 if same_plmn else i + 1,
            'generation': gen,
            'mno': 'mno0' if same_mno or same_plmn else f"mno{i}",
            'paging': {'frame_offset_ms': frame_offsets_ms[i] if i < len(frame_offsets_ms) else 0},
        })
    data: Dict[str, Any] = {
        'scenario_id': scenario_id,
        'networks': networks if not same_plmn else networks[:1],
        'devices': {'count': devices, 'num_rx': num_rx, 'mode': mode,
                    'sim_networks': [0] * len(generations) if same_plmn else list(range(len(generations)))},
        'traffic': {},
        'mobility': {'dwell_mean_s': dwell_mean_s},
        'strategies': list(strategies),
        'strategy_params': params or {},
        'horizon_s': horizon_s,
        'seed': seed,
    }
    if policy is not None:
        data['devices']['policy'] = policy
    if mt_rates is not None:
        data['traffic']['mt_rates_per_hour'] = {k: 0.0 for k in ('VOICE', 'SMS', 'DATA', 'EMERGENCY')}
        data['traffic']['mt_rates_per_hour'].update(mt_rates)
    if mo_rates is not None:
        data['traffic']['mo_rates_per_hour'] = {k: 0.0 for k in ('VOICE', 'DATA', 'EMERGENCY')}
        data['traffic']['mo_rates_per_hour'].update(mo_rates)
    if durations is not None:
        data['traffic']['mean_duration_s'] = durations
    data.update(extra)
    return load_scenario(data)
