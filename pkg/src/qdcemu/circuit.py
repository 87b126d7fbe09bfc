"""Circuit intermediate representation.

Qubit 0 is the least significant bit of every basis-state index. A two-qubit
gate acting on ``qubits=(a, b)`` uses ``a`` as the first (more significant)
tensor factor of its 4x4 matrix, so ``CX`` on ``(control, target)`` is the
textbook matrix.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import (
    ClassicalBitRewritten,
    ConditionalOnUnwrittenBit,
    IndexOutOfRange,
    NonUnitaryMatrix,
    UnknownGateName,
)

UNITARY_ATOL = 1e-12

I2 = np.eye(2, dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
S = np.array([[1, 0], [0, 1j]], dtype=complex)
SDG = S.conj().T
SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)


def controlled(u: np.ndarray) -> np.ndarray:
    """Return block-diag(I, u): the first qubit controls ``u`` on the second."""
    u = np.asarray(u, dtype=complex)
    out = np.eye(4, dtype=complex)
    out[2:, 2:] = u
    return out


def phase(theta: float) -> np.ndarray:
    return np.array([[1, 0], [0, np.exp(1j * theta)]], dtype=complex)


def rz(theta: float) -> np.ndarray:
    return np.array([[np.exp(-0.5j * theta), 0], [0, np.exp(0.5j * theta)]], dtype=complex)


def is_unitary(m: np.ndarray, atol: float = UNITARY_ATOL) -> bool:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return bool(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))) <= atol)


@dataclass(frozen=True, eq=False)
class Gate:
    """A unitary on one or two qubits."""

    name: str
    matrix: np.ndarray
    qubits: tuple[int, ...]
    params: tuple[float, ...] = ()

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        n = len(self.qubits)
        if n not in (1, 2):
            raise IndexOutOfRange(f"gate {self.name} must act on 1 or 2 qubits, got {n}")
        if len(set(self.qubits)) != n:
            raise IndexOutOfRange(f"gate {self.name} repeats a qubit: {self.qubits}")
        if m.shape != (2**n, 2**n):
            raise NonUnitaryMatrix(f"gate {self.name}: matrix shape {m.shape} does not fit {n} qubit(s)")
        if not is_unitary(m):
            raise NonUnitaryMatrix(f"gate {self.name} is not unitary to {UNITARY_ATOL}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def arity(self) -> int:
        return len(self.qubits)

    def on(self, *qubits: int) -> "Gate":
        return Gate(self.name, self.matrix, qubits, self.params)

    def __eq__(self, other):
        if not isinstance(other, Gate):
            return NotImplemented
        return (
            self.name == other.name
            and self.qubits == other.qubits
            and self.params == other.params
            and np.array_equal(self.matrix, other.matrix)
        )

    def __hash__(self):
        return hash((self.name, self.qubits, self.params))


@dataclass(frozen=True)
class Measure:
    qubit: int
    clbit: int


@dataclass(frozen=True)
class Reset:
    qubit: int


@dataclass(frozen=True)
class Conditional:
    """Apply ``gate`` iff classical bit ``clbit`` reads 1."""

    clbit: int
    gate: Gate


@dataclass(frozen=True)
class Barrier:
    label: str = ""


Instruction = Union[Gate, Measure, Reset, Conditional, Barrier]


def instruction_qubits(instr: Instruction) -> tuple[int, ...]:
    if isinstance(instr, Gate):
        return instr.qubits
    if isinstance(instr, (Measure, Reset)):
        return (instr.qubit,)
    if isinstance(instr, Conditional):
        return instr.gate.qubits
    return ()


_FIXED = {
    "H": H,
    "X": X,
    "Y": Y,
    "Z": Z,
    "S": S,
    "SDG": SDG,
    "CX": controlled(X),
    "CZ": controlled(Z),
    "SWAP": SWAP,
}
_PARAMETRIC = {"CP": lambda t: controlled(phase(t)), "RZ": rz, "P": phase}
_ARITY = {"H": 1, "X": 1, "Y": 1, "Z": 1, "S": 1, "SDG": 1, "RZ": 1, "P": 1,
          "CX": 2, "CZ": 2, "SWAP": 2, "CP": 2}


def standard_gate(name: str, *qubits: int, theta: float | None = None) -> Gate:
    """Build a named textbook gate.

    ``CP(theta)`` is diag(1, 1, 1, e^{i theta}); ``RZ(theta)`` is
    diag(e^{-i theta/2}, e^{i theta/2}).
    """
    key = name.upper()
    if key in _FIXED:
        return Gate(key, _FIXED[key], qubits)
    if key in _PARAMETRIC:
        if theta is None or not math.isfinite(theta):
            raise ValueError(f"gate {key} needs a finite theta, got {theta!r}")
        return Gate(key, _PARAMETRIC[key](theta), qubits, (theta,))
    raise UnknownGateName(name)


def gate_arity(name: str) -> int:
    try:
        return _ARITY[name.upper()]
    except KeyError:
        raise UnknownGateName(name) from None


class Circuit:
    """Ordered instruction list over ``num_qubits`` qubits and ``num_clbits`` bits.

    The builder methods validate eagerly and return ``self`` so calls chain.
    Each classical bit may be written by exactly one Measure.
    """

    def __init__(self, num_qubits: int, num_clbits: int = 0, qubit_labels: Sequence[str] | None = None):
        if num_qubits < 1:
            raise IndexOutOfRange("a circuit needs at least one qubit")
        self.num_qubits = int(num_qubits)
        self.num_clbits = int(num_clbits)
        if qubit_labels is not None and len(qubit_labels) != num_qubits:
            raise IndexOutOfRange("qubit_labels length must equal num_qubits")
        self.qubit_labels = tuple(qubit_labels) if qubit_labels is not None else None
        self._instructions: list[Instruction] = []
        self._written: set[int] = set()

    @property
    def instructions(self) -> tuple[Instruction, ...]:
        return tuple(self._instructions)

    def __len__(self):
        return len(self._instructions)

    def __iter__(self):
        return iter(self._instructions)

    def __eq__(self, other):
        if not isinstance(other, Circuit):
            return NotImplemented
        return (
            self.num_qubits == other.num_qubits
            and self.num_clbits == other.num_clbits
            and self.qubit_labels == other.qubit_labels
            and self._instructions == other._instructions
        )

    def copy(self) -> "Circuit":
        new = Circuit(self.num_qubits, self.num_clbits, self.qubit_labels)
        new._instructions = list(self._instructions)
        new._written = set(self._written)
        return new

    def new_clbit(self) -> int:
        """Allocate a fresh classical bit and return its index."""
        self.num_clbits += 1
        return self.num_clbits - 1

    def _check_qubit(self, q: int):
        if not 0 <= q < self.num_qubits:
            raise IndexOutOfRange(f"qubit {q} outside register of {self.num_qubits}")

    def _check_clbit(self, c: int):
        if not 0 <= c < self.num_clbits:
            raise IndexOutOfRange(f"clbit {c} outside register of {self.num_clbits}")

    def append(self, instr: Instruction) -> "Circuit":
        for q in instruction_qubits(instr):
            self._check_qubit(q)
        if isinstance(instr, Measure):
            self._check_clbit(instr.clbit)
            if instr.clbit in self._written:
                raise ClassicalBitRewritten(f"clbit {instr.clbit} already written")
            self._written.add(instr.clbit)
        elif isinstance(instr, Conditional):
            self._check_clbit(instr.clbit)
            if instr.clbit not in self._written:
                raise ConditionalOnUnwrittenBit(f"clbit {instr.clbit} read before any Measure wrote it")
        elif not isinstance(instr, (Gate, Reset, Barrier)):
            raise TypeError(f"not an instruction: {instr!r}")
        self._instructions.append(instr)
        return self

    def extend(self, instrs: Iterable[Instruction]) -> "Circuit":
        for instr in instrs:
            self.append(instr)
        return self

    # builder shorthands
    def gate(self, name: str, *qubits: int, theta: float | None = None) -> "Circuit":
        return self.append(standard_gate(name, *qubits, theta=theta))

    def unitary(self, matrix, *qubits: int, name: str = "U", params: Sequence[float] = ()) -> "Circuit":
        return self.append(Gate(name, matrix, qubits, tuple(params)))

    def h(self, q):
        return self.gate("H", q)

    def x(self, q):
        return self.gate("X", q)

    def z(self, q):
        return self.gate("Z", q)

    def cx(self, c, t):
        return self.gate("CX", c, t)

    def cz(self, c, t):
        return self.gate("CZ", c, t)

    def cp(self, theta, c, t):
        return self.gate("CP", c, t, theta=theta)

    def swap(self, a, b):
        return self.gate("SWAP", a, b)

    def measure(self, q: int, c: int | None = None) -> "Circuit":
        if c is None:
            c = self.new_clbit()
        return self.append(Measure(q, c))

    def reset(self, q: int) -> "Circuit":
        return self.append(Reset(q))

    def c_if(self, clbit: int, gate: Gate) -> "Circuit":
        return self.append(Conditional(clbit, gate))

    def barrier(self, label: str = "") -> "Circuit":
        return self.append(Barrier(label))

    def count(self, kind) -> int:
        return sum(isinstance(i, kind) for i in self._instructions)

    # serialization
    def to_dict(self) -> dict:
        return {
            "num_qubits": self.num_qubits,
            "num_clbits": self.num_clbits,
            "qubit_labels": list(self.qubit_labels) if self.qubit_labels else None,
            "instructions": [_instr_to_dict(i) for i in self._instructions],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, data: dict) -> "Circuit":
        circ = cls(data["num_qubits"], data["num_clbits"], data.get("qubit_labels"))
        for d in data["instructions"]:
            circ.append(_instr_from_dict(d))
        return circ

    @classmethod
    def from_json(cls, text: str) -> "Circuit":
        return cls.from_dict(json.loads(text))

    def __repr__(self):
        return f"Circuit(num_qubits={self.num_qubits}, num_clbits={self.num_clbits}, len={len(self)})"


def _encode_matrix(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def _decode_matrix(rows) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in rows], dtype=complex)


def _gate_fields(g: Gate) -> dict:
    d = {"name": g.name, "qubits": list(g.qubits), "matrix": _encode_matrix(g.matrix)}
    if g.params:
        d["theta"] = g.params[0] if len(g.params) == 1 else list(g.params)
    return d


def _instr_to_dict(instr: Instruction) -> dict:
    if isinstance(instr, Gate):
        return {"kind": f"gate{instr.arity}", "clbits": [], **_gate_fields(instr)}
    if isinstance(instr, Measure):
        return {"kind": "measure", "name": "measure", "qubits": [instr.qubit], "clbits": [instr.clbit]}
    if isinstance(instr, Reset):
        return {"kind": "reset", "name": "reset", "qubits": [instr.qubit], "clbits": []}
    if isinstance(instr, Conditional):
        return {"kind": "conditional", "clbits": [instr.clbit], **_gate_fields(instr.gate)}
    return {"kind": "barrier", "name": instr.label, "qubits": [], "clbits": []}


def _gate_from_dict(d: dict) -> Gate:
    theta = d.get("theta")
    params = () if theta is None else (tuple(theta) if isinstance(theta, list) else (theta,))
    if "matrix" in d:
        return Gate(d["name"], _decode_matrix(d["matrix"]), d["qubits"], params)
    return standard_gate(d["name"], *d["qubits"], theta=params[0] if params else None)


def _instr_from_dict(d: dict) -> Instruction:
    kind = d["kind"]
    if kind in ("gate1", "gate2"):
        return _gate_from_dict(d)
    if kind == "measure":
        return Measure(d["qubits"][0], d["clbits"][0])
    if kind == "reset":
        return Reset(d["qubits"][0])
    if kind == "conditional":
        return Conditional(d["clbits"][0], _gate_from_dict(d))
    if kind == "barrier":
        return Barrier(d.get("name", ""))
    raise ValueError(f"unknown instruction kind {kind!r}")
