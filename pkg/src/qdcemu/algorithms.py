"""Monolithic and two-QPU builders for Bell generation, 2-qubit Grover and QFT.

Every builder returns an :class:`AlgorithmCircuit` whose ``logical_qubits``
lists the physical qubits carrying the algorithm's output, most significant
first, so ``reduced(state, logical_qubits)`` is the logical register.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .circuit import Circuit, X, Z, phase
from .collision import NoiseLinkSpec
from .errors import BadMarkedString, QubitRoleViolation, UnsupportedSize
from .remote import (
    CAT_COMM,
    RemoteGateRequest,
    build_bell_pair,
    cat_comm_cu,
    cat_comm_session,
    count_bell_pairs,
)
from .topology import VirtualTopology, seven_qubit_topology, two_qpu_line

MONOLITHIC = "monolithic"
DISTRIBUTED = "distributed"


@dataclass
class AlgorithmCircuit:
    circuit: Circuit
    logical_qubits: tuple[int, ...]
    remote_gates: int = 0
    metadata: dict = field(default_factory=dict)

    @property
    def bell_pairs(self) -> int:
        return count_bell_pairs(self.circuit)


class _RemoteLink:
    """Issues cat-comm gates over one link, recycling its communication qubits."""

    def __init__(self, circuit: Circuit, topology: VirtualTopology, noise: NoiseLinkSpec):
        self.circuit = circuit
        self.topology = topology
        self.link = topology.link_between("A", "B")
        self.noise = noise
        self.used = 0
        self.gates = 0

    def _recycle(self):
        if self.used:
            self.circuit.reset(self.link.comm_a).reset(self.link.comm_b)
        self.used += 1

    def request(self, control, target, u, theta=None) -> RemoteGateRequest:
        return RemoteGateRequest(CAT_COMM, control, target, self.link, u=u, noise=self.noise,
                                 theta=theta, topology=self.topology)

    def cu(self, control, target, u, theta=None):
        self._recycle()
        cat_comm_cu(self.circuit, self.request(control, target, u, theta))
        self.gates += 1

    def session(self, control, gates):
        """``gates`` is a list of (target, u, theta) sharing ``control``."""
        self._recycle()
        reqs = [self.request(control, t, u, th) for t, u, th in gates]
        cat_comm_session(self.circuit, reqs[0], reqs)
        self.gates += len(gates)


def _side(topology: VirtualTopology, q: int) -> str:
    return topology.qpu_of(q)


# ---------------------------------------------------------------------------
# cross-QPU Bell pair between processing qubits


def cross_qpu_bell(topology: VirtualTopology, q_a: int, q_b: int, noise: NoiseLinkSpec,
                   labels=None) -> AlgorithmCircuit:
    """Entangle processing qubits ``q_a`` (QPU A) and ``q_b`` (QPU B) via a cat-comm CNOT.

    Order: noisy Bell pair on the link, H on ``q_a``, then the remote CNOT.
    """
    if _side(topology, q_a) == _side(topology, q_b):
        raise QubitRoleViolation("q_a and q_b must sit on different QPUs")
    link = topology.link_between(_side(topology, q_a), _side(topology, q_b))
    circ = Circuit(topology.num_qubits, 0, labels)
    build_bell_pair(circ, link.comm_a, link.comm_b, link.env_a, link.env_b, noise)
    circ.h(q_a)
    req = RemoteGateRequest(CAT_COMM, q_a, q_b, link, u=X, noise=noise, topology=topology)
    cat_comm_cu(circ, req, bell_pair=False)
    return AlgorithmCircuit(circ, (q_a, q_b), remote_gates=1)


def cross_bell_layout() -> tuple[VirtualTopology, list[str]]:
    return seven_qubit_topology()


def monolithic_bell() -> AlgorithmCircuit:
    circ = Circuit(2)
    circ.h(1).cx(1, 0)
    return AlgorithmCircuit(circ, (1, 0))


# ---------------------------------------------------------------------------
# two-qubit Grover


def _check_marked(marked: str):
    if not isinstance(marked, str) or len(marked) != 2 or set(marked) - {"0", "1"}:
        raise BadMarkedString(f"marked state must be one of 00, 01, 10, 11; got {marked!r}")


def grover_layout() -> tuple[VirtualTopology, list[str]]:
    """One processing qubit per QPU: A = q1(p) env(e) comm(c), B = comm(c) env(e) q2(p)."""
    return two_qpu_line(["p", "e", "c"], ["c", "e", "p"],
                        ["q1^A", "q2^A", "q3^A"], ["q1^B", "q2^B", "q3^B"])


def grover2(marked: str, layout: str = MONOLITHIC, noise: NoiseLinkSpec | None = None) -> AlgorithmCircuit:
    """One Grover iteration over two qubits; ``marked[0]`` is logical qubit 1.

    In the distributed layout logical qubit 1 lives in QPU A and qubit 2 in
    QPU B, and both CZs become cat-comm gates, each over a fresh Bell pair.
    """
    _check_marked(marked)
    if layout == MONOLITHIC:
        circ = Circuit(2)
        q1, q2 = 1, 0
        link = None
    elif layout == DISTRIBUTED:
        topo, labels = grover_layout()
        circ = Circuit(topo.num_qubits, 0, labels)
        q1, q2 = topo.processing_qubits()
        link = _RemoteLink(circ, topo, noise or NoiseLinkSpec())
    else:
        raise ValueError(f"unknown layout {layout!r}")

    def cz():
        if link is None:
            circ.cz(q1, q2)
        else:
            link.cu(q1, q2, Z)

    flips = [q for q, bit in zip((q1, q2), marked) if bit == "0"]
    circ.h(q1).h(q2)
    for q in flips:
        circ.x(q)
    cz()
    for q in flips:
        circ.x(q)
    circ.h(q1).h(q2).x(q1).x(q2)
    cz()
    circ.x(q1).x(q2).h(q1).h(q2)
    return AlgorithmCircuit(circ, (q1, q2), remote_gates=link.gates if link else 0,
                            metadata={"marked": marked, "layout": layout})


# ---------------------------------------------------------------------------
# quantum Fourier transform

QFT_SPLIT_A = (5, 1)
QFT_SPLIT_B = (2, 3, 4)


def qft_rotations(n: int) -> list[tuple]:
    """QFT gate list over logical qubits 1..n (1 = most significant), no SWAPs.

    Entries are ("H", i) or ("CP", theta, j, i): the phase pi/2^(j-i) between
    the current qubit i and each less significant qubit j.
    """
    ops = []
    for i in range(1, n + 1):
        ops.append(("H", i))
        for j in range(i + 1, n + 1):
            ops.append(("CP", math.pi / 2 ** (j - i), j, i))
    return ops


def dft_matrix(n: int) -> np.ndarray:
    N = 2**n
    jk = np.outer(np.arange(N), np.arange(N))
    return np.exp(2j * np.pi * jk / N) / math.sqrt(N)


def qft_layout() -> tuple[VirtualTopology, list[str]]:
    """A = q5 q1 env comm, B = comm env q2 q3 q4 on a nine-qubit line."""
    return two_qpu_line(["p", "p", "e", "c"], ["c", "e", "p", "p", "p"],
                        ["q5", "q1", "envA", "commA"], ["commB", "envB", "q2", "q3", "q4"])


def _prepare_input(circ: Circuit, phys: dict[int, int], n: int, input_index: int):
    if not 0 <= input_index < 2**n:
        raise ValueError(f"input index {input_index} outside 0..{2**n - 1}")
    for i in range(1, n + 1):
        if (input_index >> (n - i)) & 1:
            circ.x(phys[i])


def qft(n: int, layout: str = MONOLITHIC, noise: NoiseLinkSpec | None = None,
        input_index: int = 0, cat_sessions: bool = False) -> AlgorithmCircuit:
    """QFT on the basis input ``|input_index>``.

    Monolithic: logical qubit i sits on physical ``n - i`` and a final SWAP
    layer restores the output order. Distributed (n = 5): q5 q1 in QPU A and
    q2 q3 q4 in QPU B, no SWAPs; the output order is recovered by reading the
    logical register reversed. Each cross-QPU phase is a cat-comm gate on its
    own Bell pair unless ``cat_sessions`` merges consecutive ones that share
    a control.
    """
    if layout == MONOLITHIC:
        if not 1 <= n <= 6:
            raise UnsupportedSize(f"monolithic QFT supports 1..6 qubits, got {n}")
        circ = Circuit(n)
        phys = {i: n - i for i in range(1, n + 1)}
        _prepare_input(circ, phys, n, input_index)
        for op in qft_rotations(n):
            if op[0] == "H":
                circ.h(phys[op[1]])
            else:
                _, theta, j, i = op
                circ.cp(theta, phys[j], phys[i])
        for i in range(1, n // 2 + 1):
            circ.swap(phys[i], phys[n + 1 - i])
        return AlgorithmCircuit(circ, tuple(phys[i] for i in range(1, n + 1)),
                                metadata={"layout": layout, "input_index": input_index})
    if layout != DISTRIBUTED:
        raise ValueError(f"unknown layout {layout!r}")
    if n != 5:
        raise UnsupportedSize(f"distributed QFT is defined for 5 qubits, got {n}")

    topo, labels = qft_layout()
    circ = Circuit(topo.num_qubits, 0, labels)
    proc = topo.processing_qubits()  # physical order q5 q1 | q2 q3 q4
    phys = dict(zip(QFT_SPLIT_A + QFT_SPLIT_B, proc))
    _prepare_input(circ, phys, n, input_index)
    link = _RemoteLink(circ, topo, noise or NoiseLinkSpec())

    pending: list[tuple[int, tuple]] = []  # (control, (target, u, theta))

    def flush():
        if not pending:
            return
        control = pending[0][0]
        if len(pending) == 1:
            t, u, th = pending[0][1]
            link.cu(control, t, u, th)
        else:
            link.session(control, [g for _, g in pending])
        pending.clear()

    for op in qft_rotations(n):
        if op[0] == "H":
            flush()
            circ.h(phys[op[1]])
            continue
        _, theta, j, i = op
        a, b = phys[j], phys[i]
        if topo.qpu_of(a) == topo.qpu_of(b):
            flush()
            circ.cp(theta, a, b)
            continue
        # CP is symmetric: control on the QPU A side
        ctrl, tgt = (a, b) if topo.qpu_of(a) == "A" else (b, a)
        if pending and (pending[0][0] != ctrl or not cat_sessions):
            flush()
        pending.append((ctrl, (tgt, phase(theta), theta)))
    flush()
    logical = tuple(phys[i] for i in range(n, 0, -1))
    return AlgorithmCircuit(circ, logical, remote_gates=link.gates,
                            metadata={"layout": layout, "input_index": input_index,
                                      "cat_sessions": cat_sessions})


def qft_ideal_state(n: int, input_index: int) -> np.ndarray:
    return dft_matrix(n)[:, input_index]
