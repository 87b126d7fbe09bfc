import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qdcemu.errors import (
    CommQubitNotOnBoundary,
    DisconnectedPartition,
    RoleAdjacencyViolation,
    TopologyError,
)
from qdcemu.topology import (
    COMMUNICATION,
    ENVIRONMENT,
    PROCESSING,
    CouplingMap,
    Link,
    VirtualTopology,
    assign_roles,
    partition,
    seven_qubit_topology,
    two_qpu_line,
)

SEVEN_ROLES = {0: PROCESSING, 1: ENVIRONMENT, 2: COMMUNICATION,
               3: COMMUNICATION, 4: ENVIRONMENT, 5: PROCESSING, 6: PROCESSING}


def seven_partition():
    return partition(CouplingMap.line(7), {0: "A", 1: "A", 2: "A", 3: "B", 4: "B", 5: "B", 6: "B"})


class TestCouplingMap:
    def test_self_loop(self):
        with pytest.raises(TopologyError):
            CouplingMap(3, [(1, 1)])

    def test_out_of_range(self):
        with pytest.raises(TopologyError):
            CouplingMap(3, [(0, 3)])

    def test_edges_unordered(self):
        assert CouplingMap(3, [(0, 1), (2, 1)]) == CouplingMap(3, [(1, 2), (1, 0)])
        assert CouplingMap.line(3).has_edge(1, 0)


class TestPartition:
    def test_seven_line_one_candidate(self):
        topo = seven_partition()
        assert topo.candidate_links == ((2, 3),)
        assert topo.qpus == {"A": frozenset({0, 1, 2}), "B": frozenset({3, 4, 5, 6})}

    def test_disconnected(self):
        cmap = CouplingMap(6, [(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)])
        with pytest.raises(DisconnectedPartition):
            partition(cmap, {q: "A" for q in range(6)})

    def test_single_qpu(self):
        topo = partition(CouplingMap.line(5), {q: "A" for q in range(5)})
        assert topo.candidate_links == ()

    @settings(max_examples=40)
    @given(st.integers(2, 9), st.data())
    def test_true_partition_and_order_independence(self, n, data):
        cut = data.draw(st.integers(1, n - 1))
        assignment = {q: ("A" if q < cut else "B") for q in range(n)}
        edges = [(i, i + 1) for i in range(n - 1)]
        shuffled = data.draw(st.permutations(edges))
        t1 = partition(CouplingMap(n, edges), assignment)
        t2 = partition(CouplingMap(n, [tuple(reversed(e)) for e in shuffled]), assignment)
        assert t1 == t2
        members = sorted(q for qs in t1.qpus.values() for q in qs)
        assert members == list(range(n))
        assert t1.qpus["A"].isdisjoint(t1.qpus["B"])
        assert t1.candidate_links == ((cut - 1, cut),)


class TestAssignRoles:
    def test_seven_qubit_layout_valid(self):
        topo = assign_roles(seven_partition(), SEVEN_ROLES, [(2, 3)], {1: 2, 4: 3})
        assert topo.boundary_links == ((2, 3),)
        assert topo.link_between("A", "B") == Link(2, 3, 1, 4)
        assert topo.link_between("B", "A") == Link(3, 2, 4, 1)
        assert topo.processing_qubits() == [0, 5, 6]
        assert topo.qubits_with_role(COMMUNICATION, "B") == [3]

    def test_env_not_adjacent(self):
        roles = dict(SEVEN_ROLES)
        roles[0], roles[1] = ENVIRONMENT, PROCESSING
        with pytest.raises(RoleAdjacencyViolation):
            assign_roles(seven_partition(), roles, [(2, 3)], {0: 2, 4: 3})

    def test_link_between_processing_qubits(self):
        roles = dict(SEVEN_ROLES)
        roles[2], roles[3] = PROCESSING, PROCESSING
        with pytest.raises(CommQubitNotOnBoundary):
            assign_roles(seven_partition(), roles, [(2, 3)], {})

    def test_link_inside_one_qpu(self):
        roles = dict(SEVEN_ROLES)
        roles[1] = COMMUNICATION
        with pytest.raises(CommQubitNotOnBoundary):
            assign_roles(seven_partition(), roles, [(1, 2)], {4: 3})

    def test_env_without_service(self):
        with pytest.raises(RoleAdjacencyViolation):
            assign_roles(seven_partition(), SEVEN_ROLES, [(2, 3)], {1: 2})

    def test_unknown_role(self):
        roles = dict(SEVEN_ROLES)
        roles[0] = "flying"
        with pytest.raises(TopologyError):
            assign_roles(seven_partition(), roles, [(2, 3)], {1: 2, 4: 3})


def test_json_roundtrip(tmp_path):
    topo, _ = seven_qubit_topology()
    p = tmp_path / "topo.json"
    p.write_text(json.dumps(topo.to_dict()))
    again = VirtualTopology.load(p)
    assert again == topo
    data = topo.to_dict()
    assert set(data) == {"num_qubits", "edges", "qpus", "roles", "links", "env_serves"}


def test_two_qpu_line_labels():
    topo, labels = two_qpu_line(["p", "e", "c"], ["c", "e", "p"])
    assert labels == ["q1^A", "q2^A", "q3^A", "q1^B", "q2^B", "q3^B"]
    assert topo.link_between("A", "B") == Link(2, 3, 1, 4)
