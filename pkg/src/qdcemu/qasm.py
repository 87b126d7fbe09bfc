"""OpenQASM 3 export.

Emission scheme:

* one register pair ``qubit[n] q;`` and ``bit[m] c;`` (omitted when m = 0);
* named gates whose matrix matches the textbook definition map to
  ``stdgates.inc``: h x y z s sdg cx cz swap cp rz p;
* ``COLLISION`` gates use a ``collision(theta)`` definition emitted once in the
  header, equal to exp(-i theta (XX + YY) / 2);
* any other single-qubit unitary becomes ``U(theta, phi, lambda)`` from a ZYZ
  decomposition, dropping the global phase;
* a two-qubit block-diag(I, u) becomes ``p(gamma)`` on the control followed
  by ``ctrl @ U(theta, phi, lambda)``, so the controlled phase is kept;
* any other two-qubit unitary is written as a pragma line
  ``pragma qdcemu.unitary <re,im ...> q[a], q[b]`` carrying the 16
  row-major entries (qubit a is the high tensor factor); such gates are
  rejected inside conditionals;
* ``Conditional`` becomes ``if (c[i] == 1) { ... }``.
"""

from __future__ import annotations

import cmath
import math
from pathlib import Path

import numpy as np

from .circuit import (
    Barrier,
    Circuit,
    Conditional,
    Gate,
    H,
    Measure,
    Reset,
    S,
    SDG,
    SWAP,
    X,
    Y,
    Z,
    controlled,
    phase,
    rz,
)
from .collision import collision_unitary
from .errors import UnsupportedInstruction

HEADER = 'OPENQASM 3.0;\ninclude "stdgates.inc";\n'

# body of the collision gate on (a = system, b = environment)
COLLISION_BODY = (
    ("h", "a"), ("h", "b"), ("cx", "a", "b"), ("rz", "b"), ("cx", "a", "b"), ("h", "a"), ("h", "b"),
    ("sdg", "a"), ("sdg", "b"),
    ("h", "a"), ("h", "b"), ("cx", "a", "b"), ("rz", "b"), ("cx", "a", "b"), ("h", "a"), ("h", "b"),
    ("s", "a"), ("s", "b"),
)


def _collision_definition() -> str:
    lines = []
    for name, *qs in COLLISION_BODY:
        arg = "(theta)" if name == "rz" else ""
        lines.append(f"  {name}{arg} {', '.join(qs)};")
    return "gate collision(theta) a, b {\n" + "\n".join(lines) + "\n}\n"


_FIXED_1Q = {"H": ("h", H), "X": ("x", X), "Y": ("y", Y), "Z": ("z", Z), "S": ("s", S), "SDG": ("sdg", SDG)}
_FIXED_2Q = {"CX": ("cx", controlled(X)), "CZ": ("cz", controlled(Z)), "SWAP": ("swap", SWAP)}
_PARAM = {"CP": ("cp", lambda t: controlled(phase(t))), "RZ": ("rz", rz), "P": ("p", phase)}


def _num(x: float) -> str:
    return format(float(x), ".17g")


def u3_params(u: np.ndarray) -> tuple[float, float, float, float]:
    """(gamma, theta, phi, lam) with u = e^{i gamma} U(theta, phi, lam).

    U(theta, phi, lam) = [[cos(theta/2), -e^{i lam} sin(theta/2)],
                          [e^{i phi} sin(theta/2), e^{i (phi + lam)} cos(theta/2)]].
    """
    u = np.asarray(u, dtype=complex)
    a, b, c, d = u[0, 0], u[0, 1], u[1, 0], u[1, 1]
    theta = 2 * math.atan2(abs(c), abs(a))
    eps = 1e-12
    if abs(a) > eps:
        gamma = cmath.phase(a)
        if abs(c) > eps:
            phi = cmath.phase(c) - gamma
            lam = cmath.phase(-b) - gamma
        else:
            phi = 0.0
            lam = cmath.phase(d) - gamma
    else:
        gamma = cmath.phase(c)
        phi = 0.0
        lam = cmath.phase(-b) - gamma
    return gamma, theta, phi, lam


def u3_matrix(theta: float, phi: float, lam: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -cmath.exp(1j * lam) * s],
                     [cmath.exp(1j * phi) * s, cmath.exp(1j * (phi + lam)) * c]])


def _controlled_part(m: np.ndarray) -> np.ndarray | None:
    if np.allclose(m[:2, :2], np.eye(2), atol=1e-12) and np.allclose(m[:2, 2:], 0, atol=1e-12) \
            and np.allclose(m[2:, :2], 0, atol=1e-12):
        return m[2:, 2:]
    return None


def _q(i: int) -> str:
    return f"q[{i}]"


def gate_lines(g: Gate, conditional: bool = False) -> list[str]:
    """QASM statements for one gate."""
    m = g.matrix
    qs = ", ".join(_q(i) for i in g.qubits)
    if g.name in _FIXED_1Q and np.allclose(m, _FIXED_1Q[g.name][1], atol=1e-12):
        return [f"{_FIXED_1Q[g.name][0]} {qs};"]
    if g.name in _FIXED_2Q and np.allclose(m, _FIXED_2Q[g.name][1], atol=1e-12):
        return [f"{_FIXED_2Q[g.name][0]} {qs};"]
    if g.name in _PARAM and len(g.params) == 1:
        name, build = _PARAM[g.name]
        if np.allclose(m, build(g.params[0]), atol=1e-12):
            return [f"{name}({_num(g.params[0])}) {qs};"]
    if g.name == "COLLISION" and len(g.params) == 1 and np.allclose(m, collision_unitary(g.params[0]), atol=1e-12):
        return [f"collision({_num(g.params[0])}) {qs};"]
    if g.arity == 1:
        _, th, ph, la = u3_params(m)
        return [f"U({_num(th)}, {_num(ph)}, {_num(la)}) {qs};"]
    u = _controlled_part(m)
    if u is not None:
        gamma, th, ph, la = u3_params(u)
        out = []
        if abs(gamma) > 1e-15:
            out.append(f"p({_num(gamma)}) {_q(g.qubits[0])};")
        out.append(f"ctrl @ U({_num(th)}, {_num(ph)}, {_num(la)}) {qs};")
        return out
    if conditional:
        raise UnsupportedInstruction(f"arbitrary two-qubit gate {g.name} cannot be exported inside a conditional")
    entries = " ".join(f"{_num(z.real)},{_num(z.imag)}" for z in m.reshape(-1))
    return [f"pragma qdcemu.unitary {entries} {qs}"]


def _uses_collision(circuit: Circuit) -> bool:
    for ins in circuit:
        g = ins.gate if isinstance(ins, Conditional) else ins
        if isinstance(g, Gate) and g.name == "COLLISION":
            return True
    return False


def to_qasm(circuit: Circuit) -> str:
    out = [HEADER]
    if _uses_collision(circuit):
        out.append(_collision_definition())
    out.append(f"qubit[{circuit.num_qubits}] q;\n")
    if circuit.num_clbits:
        out.append(f"bit[{circuit.num_clbits}] c;\n")
    for ins in circuit:
        if isinstance(ins, Gate):
            lines = gate_lines(ins)
        elif isinstance(ins, Measure):
            lines = [f"c[{ins.clbit}] = measure {_q(ins.qubit)};"]
        elif isinstance(ins, Reset):
            lines = [f"reset {_q(ins.qubit)};"]
        elif isinstance(ins, Conditional):
            body = " ".join(gate_lines(ins.gate, conditional=True))
            lines = [f"if (c[{ins.clbit}] == 1) {{ {body} }}"]
        elif isinstance(ins, Barrier):
            lines = ([f"// {ins.label}"] if ins.label else []) + ["barrier q;"]
        else:
            raise UnsupportedInstruction(f"cannot export {ins!r}")
        out.extend(line + "\n" for line in lines)
    return "".join(out)


def export_qasm(circuit: Circuit, path: str | Path) -> None:
    with open(path, "w") as fh:
        fh.write(to_qasm(circuit))
