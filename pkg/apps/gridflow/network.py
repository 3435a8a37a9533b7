"""
Radial distribution network model and case-file loader.
"""
import json
import logging
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Dict, Tuple, Union

import networkx as nx
import numpy as np
from django.conf import settings

from apps.scenario.devices import DeviceSpec, DEVICE_KINDS
from apps.shared.exceptions import ContractViolation, NetworkDataError

logger = logging.getLogger(__name__)

CASE_NAMES = ('case33', 'case69', 'case118')

_TOP_LEVEL_FIELDS = {'base_mva', 'base_kv', 'slack_bus', 'buses', 'branches', 'devices'}
_BUS_FIELDS = {'id', 'load_p_mw', 'load_q_mvar'}
_BRANCH_FIELDS = {'from', 'to', 'r_ohm', 'x_ohm'}
_DEVICE_FIELDS = {'kind', 'bus', 's_mva', 'p_max_mw', 'q_min_mvar', 'q_max_mvar'}


@dataclass(frozen=True)
class Bus:
    id: int
    load_p: float
    load_q: float


@dataclass(frozen=True)
class Branch:
    from_bus: int
    to_bus: int
    r: float
    x: float


@dataclass(frozen=True)
class Injections:
    """Net injections per bus in MW / MVar, generation positive, slack entry ignored."""
    p: np.ndarray
    q: np.ndarray

    @classmethod
    def zeros(cls, n_bus: int) -> 'Injections':
        return cls(np.zeros(n_bus), np.zeros(n_bus))


@dataclass(frozen=True, eq=False)
class Network:
    """Balanced single-phase equivalent of a radial feeder.

    Topology matrices are derived lazily and cached; the dataclass itself
    is never mutated, so one instance can be shared between solvers.
    """
    buses: Tuple[Bus, ...]
    branches: Tuple[Branch, ...]
    slack_bus: int
    base_mva: float = 10.0
    base_kv: float = 12.66
    devices: Tuple[DeviceSpec, ...] = field(default_factory=tuple)
    name: str = 'custom'

    def __post_init__(self):
        _validate(self)

    @property
    def n_bus(self) -> int:
        return len(self.buses)

    @property
    def n_branch(self) -> int:
        return len(self.branches)

    @property
    def z_base(self) -> float:
        return self.base_kv ** 2 / self.base_mva

    @cached_property
    def bus_index(self) -> Dict[int, int]:
        return {bus.id: i for i, bus in enumerate(self.buses)}

    @cached_property
    def slack_index(self) -> int:
        return self.bus_index[self.slack_bus]

    @cached_property
    def load_p(self) -> np.ndarray:
        return np.array([bus.load_p for bus in self.buses], dtype=float)

    @cached_property
    def load_q(self) -> np.ndarray:
        return np.array([bus.load_q for bus in self.buses], dtype=float)

    @cached_property
    def device_index(self) -> np.ndarray:
        """Bus position of every device, in device order."""
        return np.array([self.bus_index[spec.bus] for spec in self.devices], dtype=int)

    @cached_property
    def branch_ends(self) -> Tuple[np.ndarray, np.ndarray]:
        """(parent, child) bus positions per branch, oriented away from the slack bus."""
        graph = nx.Graph()
        graph.add_nodes_from(range(self.n_bus))
        for k, branch in enumerate(self.branches):
            graph.add_edge(self.bus_index[branch.from_bus], self.bus_index[branch.to_bus], k=k)
        parent = np.empty(self.n_branch, dtype=int)
        child = np.empty(self.n_branch, dtype=int)
        for u, v in nx.bfs_edges(graph, self.slack_index):
            k = graph.edges[u, v]['k']
            parent[k], child[k] = u, v
        return parent, child

    @cached_property
    def impedance_pu(self) -> np.ndarray:
        return np.array([complex(b.r, b.x) for b in self.branches]) / self.z_base

    @cached_property
    def non_slack(self) -> np.ndarray:
        return np.array([i for i in range(self.n_bus) if i != self.slack_index], dtype=int)

    @cached_property
    def bibc(self) -> np.ndarray:
        """Bus-injection to branch-current matrix over the non-slack buses.

        Row k is branch k, column m is non-slack bus m; the entry is 1 when
        the bus lies in the subtree fed through the branch.
        """
        parent, child = self.branch_ends
        branch_into = {int(c): k for k, c in enumerate(child)}
        column = {int(bus): m for m, bus in enumerate(self.non_slack)}
        matrix = np.zeros((self.n_branch, len(self.non_slack)))
        for bus in self.non_slack:
            node = int(bus)
            while node != self.slack_index:
                k = branch_into[node]
                matrix[k, column[int(bus)]] = 1.0
                node = int(parent[k])
        return matrix

    @cached_property
    def incidence(self) -> np.ndarray:
        """Branch-bus incidence, +1 at the parent end and -1 at the child end."""
        parent, child = self.branch_ends
        matrix = np.zeros((self.n_branch, self.n_bus))
        matrix[np.arange(self.n_branch), parent] = 1.0
        matrix[np.arange(self.n_branch), child] = -1.0
        return matrix

    def with_devices(self, devices) -> 'Network':
        return replace(self, devices=tuple(devices))


def _validate(net: Network):
    ids = [bus.id for bus in net.buses]
    if len(set(ids)) != len(ids):
        raise NetworkDataError("Duplicate bus ids", network=net.name)
    if net.slack_bus not in ids:
        raise NetworkDataError("Slack bus is not a bus of the network", network=net.name, slack_bus=net.slack_bus)
    if net.base_mva <= 0 or net.base_kv <= 0:
        raise NetworkDataError("Base values must be positive", network=net.name)
    for bus in net.buses:
        if not (np.isfinite(bus.load_p) and np.isfinite(bus.load_q)):
            raise NetworkDataError("Load values must be finite", bus=bus.id)
    known = set(ids)
    graph = nx.MultiGraph()
    graph.add_nodes_from(ids)
    for branch in net.branches:
        if branch.from_bus == branch.to_bus:
            raise NetworkDataError("Branch connects a bus to itself", bus=branch.from_bus)
        if branch.from_bus not in known or branch.to_bus not in known:
            raise NetworkDataError("Branch endpoint is not a bus", branch=(branch.from_bus, branch.to_bus))
        if branch.r < 0 or branch.x < 0:
            raise NetworkDataError("Negative branch impedance", branch=(branch.from_bus, branch.to_bus))
        if branch.r == 0 and branch.x == 0:
            raise NetworkDataError("Branch has zero impedance; merge its end buses instead",
                                   branch=(branch.from_bus, branch.to_bus))
        graph.add_edge(branch.from_bus, branch.to_bus)
    if not nx.is_tree(graph):
        raise NetworkDataError("Network is not radial", network=net.name,
                               buses=len(ids), branches=len(net.branches))
    for spec in net.devices:
        if spec.bus not in known:
            raise NetworkDataError("Device placed on an unknown bus", bus=spec.bus)


def _require_fields(record: dict, expected: set, where: str):
    if not isinstance(record, dict):
        raise NetworkDataError(f"{where} entry must be an object")
    missing = expected - record.keys()
    unknown = record.keys() - expected
    if missing:
        raise NetworkDataError(f"{where} entry misses fields", missing=sorted(missing))
    if unknown:
        raise NetworkDataError(f"{where} entry has unknown fields", unknown=sorted(unknown))


def network_from_dict(data: dict, name: str = 'custom') -> Network:
    _require_fields(data, _TOP_LEVEL_FIELDS, 'case')
    try:
        buses = []
        for record in data['buses']:
            _require_fields(record, _BUS_FIELDS, 'bus')
            buses.append(Bus(int(record['id']), float(record['load_p_mw']), float(record['load_q_mvar'])))
        branches = []
        for record in data['branches']:
            _require_fields(record, _BRANCH_FIELDS, 'branch')
            branches.append(Branch(int(record['from']), int(record['to']),
                                   float(record['r_ohm']), float(record['x_ohm'])))
        devices = []
        for record in data['devices']:
            _require_fields(record, _DEVICE_FIELDS, 'device')
            if record['kind'] not in DEVICE_KINDS:
                raise NetworkDataError("Unknown device kind", kind=record['kind'])
            devices.append(DeviceSpec(
                kind=record['kind'],
                bus=int(record['bus']),
                s_mva=float(record['s_mva']),
                p_max=float(record['p_max_mw']),
                q_min=float(record['q_min_mvar']),
                q_max=float(record['q_max_mvar']),
            ))
        return Network(
            buses=tuple(buses),
            branches=tuple(branches),
            slack_bus=int(data['slack_bus']),
            base_mva=float(data['base_mva']),
            base_kv=float(data['base_kv']),
            devices=tuple(devices),
            name=name,
        )
    except (TypeError, ValueError) as exc:
        raise NetworkDataError(f"Malformed case data: {exc}", network=name) from exc


def load_network(path: Union[str, Path]) -> Network:
    """Read and validate a JSON case file."""
    path = Path(path)
    if not path.exists():
        raise NetworkDataError("Case file not found", path=str(path))
    try:
        data = json.loads(path.read_text(encoding='utf-8'))
    except json.JSONDecodeError as exc:
        raise NetworkDataError(f"Case file is not valid JSON: {exc}", path=str(path)) from exc
    net = network_from_dict(data, name=path.stem)
    logger.debug(f"Loaded {net.name}: {net.n_bus} buses, {net.n_branch} branches, {len(net.devices)} devices")
    return net


def load_case(name: str) -> Network:
    """Resolve a bundled case (case33, case69, case118) from VVC_CASES_DIR."""
    if name not in CASE_NAMES:
        raise NetworkDataError("Unknown case name", name=name, known=CASE_NAMES)
    path = Path(settings.VVC_CASES_DIR) / f"{name}.json"
    if not path.exists():
        raise NetworkDataError("Case file is not installed", name=name, expected_path=str(path))
    return load_network(path)


def scale_impedances(net: Network, factor: float) -> Network:
    """Reference model: every branch r and x multiplied by ``factor``."""
    if not factor > 0:
        raise ContractViolation("Impedance factor must be positive", factor=factor)
    if factor == 1.0:
        branches = net.branches
    else:
        branches = tuple(replace(b, r=b.r * factor, x=b.x * factor) for b in net.branches)
    return replace(net, branches=branches, name=f"{net.name}@x{factor:g}" if factor != 1.0 else net.name)
