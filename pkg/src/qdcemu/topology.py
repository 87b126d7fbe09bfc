"""Partition a physical coupling map into virtual QPUs with qubit roles."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import networkx as nx

from .errors import (
    CommQubitNotOnBoundary,
    DisconnectedPartition,
    RoleAdjacencyViolation,
    TopologyError,
)

PROCESSING = "processing"
COMMUNICATION = "communication"
ENVIRONMENT = "environment"
ROLES = (PROCESSING, COMMUNICATION, ENVIRONMENT)


@dataclass(frozen=True)
class CouplingMap:
    num_qubits: int
    edges: frozenset[frozenset[int]]

    def __init__(self, num_qubits: int, edges: Iterable[Iterable[int]]):
        es = set()
        for e in edges:
            a, b = (int(x) for x in e)
            if a == b:
                raise TopologyError(f"self-loop on qubit {a}")
            if not (0 <= a < num_qubits and 0 <= b < num_qubits):
                raise TopologyError(f"edge ({a}, {b}) outside {num_qubits} qubits")
            es.add(frozenset((a, b)))
        object.__setattr__(self, "num_qubits", int(num_qubits))
        object.__setattr__(self, "edges", frozenset(es))

    @classmethod
    def line(cls, n: int) -> "CouplingMap":
        return cls(n, [(i, i + 1) for i in range(n - 1)])

    def has_edge(self, a: int, b: int) -> bool:
        return frozenset((a, b)) in self.edges

    def graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.num_qubits))
        g.add_edges_from(tuple(e) for e in self.edges)
        return g


@dataclass(frozen=True)
class Link:
    """A boundary interconnect plus the environment qubits emulating its noise."""

    comm_a: int
    comm_b: int
    env_a: int
    env_b: int


@dataclass(frozen=True)
class VirtualTopology:
    coupling: CouplingMap
    qpus: dict[str, frozenset[int]]
    candidate_links: tuple[tuple[int, int], ...]
    roles: dict[int, str] = field(default_factory=dict)
    boundary_links: tuple[tuple[int, int], ...] = ()
    env_serves: dict[int, int] = field(default_factory=dict)

    @property
    def num_qubits(self) -> int:
        return self.coupling.num_qubits

    def qpu_of(self, q: int) -> str:
        for name, qs in self.qpus.items():
            if q in qs:
                return name
        raise TopologyError(f"qubit {q} belongs to no QPU")

    def qubits_with_role(self, role: str, qpu: str | None = None) -> list[int]:
        qs = sorted(q for q, r in self.roles.items() if r == role)
        if qpu is not None:
            qs = [q for q in qs if q in self.qpus[qpu]]
        return qs

    def processing_qubits(self) -> list[int]:
        return self.qubits_with_role(PROCESSING)

    def env_for(self, comm: int) -> int:
        for env, c in self.env_serves.items():
            if c == comm:
                return env
        raise TopologyError(f"communication qubit {comm} has no environment qubit")

    def link_between(self, qpu_a: str, qpu_b: str) -> Link:
        """The first declared link with one end in ``qpu_a`` and the other in ``qpu_b``."""
        for a, b in self.boundary_links:
            if a in self.qpus[qpu_b] and b in self.qpus[qpu_a]:
                a, b = b, a
            if a in self.qpus[qpu_a] and b in self.qpus[qpu_b]:
                return Link(a, b, self.env_for(a), self.env_for(b))
        raise TopologyError(f"no boundary link between {qpu_a} and {qpu_b}")

    def to_dict(self) -> dict:
        return {
            "num_qubits": self.num_qubits,
            "edges": sorted(sorted(e) for e in self.coupling.edges),
            "qpus": {k: sorted(v) for k, v in self.qpus.items()},
            "roles": {str(q): r for q, r in sorted(self.roles.items())},
            "links": [list(l) for l in self.boundary_links],
            "env_serves": {str(e): c for e, c in sorted(self.env_serves.items())},
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "VirtualTopology":
        cmap = CouplingMap(data["num_qubits"], data["edges"])
        assignment = {int(q): name for name, qs in data["qpus"].items() for q in qs}
        topo = partition(cmap, assignment)
        if data.get("roles"):
            topo = assign_roles(
                topo,
                {int(q): r for q, r in data["roles"].items()},
                [tuple(l) for l in data.get("links", [])],
                {int(e): int(c) for e, c in data.get("env_serves", {}).items()},
            )
        return topo

    @classmethod
    def load(cls, path: str | Path) -> "VirtualTopology":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def partition(coupling: CouplingMap, assignment: Mapping[int, str]) -> VirtualTopology:
    """Group qubits into QPUs; every cross-QPU physical edge becomes a candidate link.

    Raises DisconnectedPartition when a QPU's induced subgraph is disconnected.
    """
    qpus: dict[str, set[int]] = {}
    for q, name in assignment.items():
        if not 0 <= q < coupling.num_qubits:
            raise TopologyError(f"qubit {q} outside coupling map")
        qpus.setdefault(name, set()).add(q)
    g = coupling.graph()
    for name, qs in qpus.items():
        if not nx.is_connected(g.subgraph(qs)):
            raise DisconnectedPartition(f"QPU {name!r} is not connected: {sorted(qs)}")
    links = sorted(
        tuple(sorted(e))
        for e in coupling.edges
        if all(q in assignment for q in e) and len({assignment[q] for q in e}) == 2
    )
    return VirtualTopology(
        coupling,
        {name: frozenset(qs) for name, qs in sorted(qpus.items())},
        tuple(links),
    )


def assign_roles(
    topology: VirtualTopology,
    roles: Mapping[int, str],
    links: Iterable[tuple[int, int]],
    env_serves: Mapping[int, int],
) -> VirtualTopology:
    """Validate and attach qubit roles, boundary links and env->comm service map."""
    roles = {int(q): r for q, r in roles.items()}
    for q, r in roles.items():
        if r not in ROLES:
            raise TopologyError(f"qubit {q}: unknown role {r!r}")
        topology.qpu_of(q)
    cmap = topology.coupling
    checked = []
    for a, b in links:
        if roles.get(a) != COMMUNICATION or roles.get(b) != COMMUNICATION:
            raise CommQubitNotOnBoundary(f"link ({a}, {b}) must join two communication qubits")
        if topology.qpu_of(a) == topology.qpu_of(b):
            raise CommQubitNotOnBoundary(f"link ({a}, {b}) does not cross QPUs")
        if not cmap.has_edge(a, b):
            raise CommQubitNotOnBoundary(f"link ({a}, {b}) is not a physical edge")
        checked.append((int(a), int(b)))
    for env, comm in env_serves.items():
        if roles.get(env) != ENVIRONMENT:
            raise RoleAdjacencyViolation(f"qubit {env} serves {comm} but is not an environment qubit")
        if roles.get(comm) != COMMUNICATION:
            raise RoleAdjacencyViolation(f"environment qubit {env} serves non-communication qubit {comm}")
        if not cmap.has_edge(env, comm):
            raise RoleAdjacencyViolation(f"environment qubit {env} is not adjacent to {comm}")
    for q, r in roles.items():
        if r == ENVIRONMENT and q not in env_serves:
            raise RoleAdjacencyViolation(f"environment qubit {q} serves no communication qubit")
    return VirtualTopology(
        cmap,
        topology.qpus,
        topology.candidate_links,
        dict(sorted(roles.items())),
        tuple(checked),
        dict(sorted((int(e), int(c)) for e, c in env_serves.items())),
    )


def two_qpu_line(
    qpu_a: list[str],
    qpu_b: list[str],
    labels_a: list[str] | None = None,
    labels_b: list[str] | None = None,
) -> tuple[VirtualTopology, list[str]]:
    """Two QPUs on a physical line, given as role letters 'p', 'e', 'c'.

    The last qubit of ``qpu_a`` and the first of ``qpu_b`` must be the
    communication qubits joined by the boundary link; each QPU holds exactly
    one environment qubit, which serves that QPU's communication qubit.
    """
    letters = {"p": PROCESSING, "c": COMMUNICATION, "e": ENVIRONMENT}
    n = len(qpu_a) + len(qpu_b)
    assignment = {i: "A" for i in range(len(qpu_a))}
    assignment.update({len(qpu_a) + i: "B" for i in range(len(qpu_b))})
    roles = {i: letters[r] for i, r in enumerate(qpu_a + qpu_b)}
    comm_a, comm_b = len(qpu_a) - 1, len(qpu_a)
    env_a = next(i for i in range(len(qpu_a)) if qpu_a[i] == "e")
    env_b = next(len(qpu_a) + i for i in range(len(qpu_b)) if qpu_b[i] == "e")
    topo = partition(CouplingMap.line(n), assignment)
    topo = assign_roles(topo, roles, [(comm_a, comm_b)], {env_a: comm_a, env_b: comm_b})
    labels = (labels_a or [f"q{i + 1}^A" for i in range(len(qpu_a))]) + (
        labels_b or [f"q{i + 1}^B" for i in range(len(qpu_b))]
    )
    return topo, labels


def seven_qubit_topology() -> tuple[VirtualTopology, list[str]]:
    """Seven-qubit line: A = q1^A(p) q2^A(e) q3^A(c), B = q1^B(c) q2^B(e) q3^B(p) q4^B(p)."""
    return two_qpu_line(["p", "e", "c"], ["c", "e", "p", "p"])
