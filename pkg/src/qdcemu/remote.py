"""Remote controlled gates over a noisy shared Bell pair.

Two protocols are built: cat-comm, which shares the control through a cat
state and leaves it in place, and TP1, which teleports the control onto the
remote communication qubit and consumes the original.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .circuit import Barrier, Circuit, Gate, X, Z, controlled, standard_gate
from .collision import NoiseLinkSpec, insert_link_noise
from .engine import evolve_exact, reduced, sample_shots
from .errors import ProtocolMismatch, QubitRoleViolation
from .topology import COMMUNICATION, ENVIRONMENT, PROCESSING, Link, VirtualTopology, seven_qubit_topology

CAT_COMM = "CatComm"
TP1 = "TP1"
PROTOCOLS = (CAT_COMM, TP1)
BELL_PAIR_LABEL = "bell-pair"


def controlled_gate(u: np.ndarray, control: int, target: int, theta: float | None = None) -> Gate:
    """block-diag(I, u) on (control, target), named after u when it is standard."""
    u = np.asarray(u, dtype=complex)
    if theta is not None:
        return standard_gate("CP", control, target, theta=theta)
    if np.array_equal(u, X):
        return standard_gate("CX", control, target)
    if np.array_equal(u, Z):
        return standard_gate("CZ", control, target)
    return Gate("CU", controlled(u), (control, target))


@dataclass(frozen=True)
class RemoteGateRequest:
    protocol: str
    control: int
    target: int
    link: Link
    u: np.ndarray = field(default_factory=lambda: X.copy())
    noise: NoiseLinkSpec = field(default_factory=NoiseLinkSpec)
    theta: float | None = None  # set when u is a phase gate, for naming only
    topology: VirtualTopology | None = None

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise ProtocolMismatch(f"unknown protocol {self.protocol!r}")
        link_qubits = {self.link.comm_a, self.link.comm_b, self.link.env_a, self.link.env_b}
        if len(link_qubits) != 4:
            raise QubitRoleViolation("link qubits must be distinct")
        if self.control == self.target or {self.control, self.target} & link_qubits:
            raise QubitRoleViolation("control/target must be distinct processing qubits")
        Gate("U", self.u, (0,))  # unitarity check
        topo = self.topology
        if topo is not None:
            roles = topo.roles
            if roles.get(self.control) != PROCESSING or roles.get(self.target) != PROCESSING:
                raise QubitRoleViolation("control and target must be processing qubits")
            if topo.qpu_of(self.control) == topo.qpu_of(self.target):
                raise QubitRoleViolation("control and target sit in the same QPU")
            if topo.qpu_of(self.control) != topo.qpu_of(self.link.comm_a):
                raise QubitRoleViolation("comm_a must share the control's QPU")
            if topo.qpu_of(self.target) != topo.qpu_of(self.link.comm_b):
                raise QubitRoleViolation("comm_b must share the target's QPU")
            for q, role in ((self.link.comm_a, COMMUNICATION), (self.link.comm_b, COMMUNICATION),
                            (self.link.env_a, ENVIRONMENT), (self.link.env_b, ENVIRONMENT)):
                if roles.get(q) != role:
                    raise QubitRoleViolation(f"qubit {q} must have role {role}")

    def cu_gate(self, control: int) -> Gate:
        return controlled_gate(self.u, control, self.target, self.theta)


def build_bell_pair(circuit: Circuit, comm_a: int, comm_b: int, env_a: int, env_b: int,
                    noise: NoiseLinkSpec) -> Circuit:
    """H(comm_a); CX(comm_a, comm_b); then the link's collision noise."""
    circuit.barrier(BELL_PAIR_LABEL)
    circuit.h(comm_a).cx(comm_a, comm_b)
    return insert_link_noise(circuit, comm_a, env_a, comm_b, env_b, noise)


def _bell(circuit: Circuit, req: RemoteGateRequest) -> None:
    l = req.link
    build_bell_pair(circuit, l.comm_a, l.comm_b, l.env_a, l.env_b, req.noise)


def cat_comm_cu(circuit: Circuit, request: RemoteGateRequest, bell_pair: bool = True) -> Circuit:
    """Append a cat-comm controlled-U; the control keeps its state.

    With ``bell_pair=False`` the caller has already shared the pair (and may
    have placed local gates in between).
    """
    if request.protocol != CAT_COMM:
        raise ProtocolMismatch(f"cat_comm_cu got protocol {request.protocol!r}")
    return cat_comm_session(circuit, request, [request], bell_pair)


def cat_comm_session(circuit: Circuit, head: RemoteGateRequest, requests: Sequence[RemoteGateRequest],
                     bell_pair: bool = True) -> Circuit:
    """Several controlled gates sharing one control and one cat state.

    ``requests`` must all name ``head.control``; their CUs are applied from
    the remote communication qubit back to back before disentangling.
    """
    if any(r.control != head.control for r in requests):
        raise ProtocolMismatch("a cat session needs a single control qubit")
    l = head.link
    if bell_pair:
        _bell(circuit, head)
    circuit.cx(head.control, l.comm_a)
    c1 = circuit.new_clbit()
    circuit.measure(l.comm_a, c1)
    circuit.c_if(c1, standard_gate("X", l.comm_b))
    for r in requests:
        circuit.append(r.cu_gate(l.comm_b))
    circuit.h(l.comm_b)
    c2 = circuit.new_clbit()
    circuit.measure(l.comm_b, c2)
    circuit.c_if(c2, standard_gate("Z", head.control))
    return circuit


def tp1_cu(circuit: Circuit, request: RemoteGateRequest, bell_pair: bool = True) -> Circuit:
    """Teleport the control onto comm_b, then apply the CU locally in QPU B.

    The logical control afterwards lives on ``request.link.comm_b``.
    """
    if request.protocol != TP1:
        raise ProtocolMismatch(f"tp1_cu got protocol {request.protocol!r}")
    l = request.link
    if bell_pair:
        _bell(circuit, request)
    circuit.cx(request.control, l.comm_a)
    circuit.h(request.control)
    c1, c2 = circuit.new_clbit(), circuit.new_clbit()
    circuit.measure(l.comm_a, c1)
    circuit.measure(request.control, c2)
    circuit.c_if(c1, standard_gate("X", l.comm_b))
    circuit.c_if(c2, standard_gate("Z", l.comm_b))
    circuit.append(request.cu_gate(l.comm_b))
    return circuit


def tp1_cnot(circuit: Circuit, request: RemoteGateRequest) -> Circuit:
    if not np.array_equal(request.u, X):
        raise ProtocolMismatch("tp1_cnot requires u = X")
    return tp1_cu(circuit, request)


def remote_cu(circuit: Circuit, request: RemoteGateRequest) -> Circuit:
    if request.protocol == CAT_COMM:
        return cat_comm_cu(circuit, request)
    return tp1_cu(circuit, request)


def control_output(request: RemoteGateRequest) -> int:
    """Qubit holding the logical control after the protocol ran."""
    return request.link.comm_b if request.protocol == TP1 else request.control


def count_bell_pairs(circuit: Circuit) -> int:
    return sum(isinstance(i, Barrier) and i.label == BELL_PAIR_LABEL for i in circuit)


@dataclass
class RemoteCnotExperiment:
    circuit: Circuit
    control_out: int
    target: int
    control_init: int


def remote_cnot_circuit(protocol: str, control_init: int, noise: NoiseLinkSpec) -> RemoteCnotExperiment:
    """Remote CNOT on the seven-qubit two-QPU line, control q1^A, target q4^B |0>."""
    if control_init not in (0, 1):
        raise ValueError("control_init must be 0 or 1")
    topo, labels = seven_qubit_topology()
    link = topo.link_between("A", "B")
    control = topo.processing_qubits()[0]
    target = topo.processing_qubits()[-1]
    req = RemoteGateRequest(protocol, control, target, link, noise=noise, topology=topo)
    circ = Circuit(topo.num_qubits, 0, labels)
    if control_init:
        circ.x(control)
    remote_cu(circ, req)
    return RemoteCnotExperiment(circ, control_output(req), target, control_init)


def success_probability(protocol: str, control_init: int, noise: NoiseLinkSpec,
                        shots: int | None = None, seed: int = 0) -> float:
    """Probability that (control, target) reads the ideal CNOT output.

    Exact when ``shots`` is None, otherwise the sampled frequency. The
    protocol's own mid-circuit bits are marginalized away.
    """
    exp = remote_cnot_circuit(protocol, control_init, noise)
    ideal = f"{control_init}{control_init}"
    if shots is None:
        rho = reduced(evolve_exact(exp.circuit), [exp.control_out, exp.target])
        return rho.probability(ideal)
    circ = exp.circuit.copy()
    a, b = circ.new_clbit(), circ.new_clbit()
    circ.measure(exp.control_out, a).measure(exp.target, b)
    res = sample_shots(circ, shots, seed)
    return res.marginal([a, b], circ.num_clbits).get(ideal, 0) / shots
