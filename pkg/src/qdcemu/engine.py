"""Exact density-matrix evolution and seeded shot sampling.

Conventions: qubit 0 is the least significant bit of a basis index, and
bitstrings (outcome keys, Pauli strings) are written most-significant first.

Exact evolution resolves feed-forward by deferred measurement: a Measure
dephases its qubit, which then stands in for the classical bit, and a
Conditional becomes a gate coherently controlled by that qubit. When the
measured qubit is touched again before the last read of its bit, the bit is
first copied onto a scratch ancilla wire that is reset and recycled after
the bit's last read.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .circuit import (
    Circuit,
    Conditional,
    Gate,
    Instruction,
    Measure,
    Reset,
    controlled,
    instruction_qubits,
)
from .errors import (
    BadPauliString,
    DimensionMismatch,
    EmptyKeepSet,
    NonTracePreservingSet,
)

_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

MAX_QUBITS = 12


class DensityMatrix:
    """Density matrix over ``num_qubits`` qubits (qubit 0 = least significant)."""

    def __init__(self, data, num_qubits: int | None = None):
        data = np.array(data, dtype=complex)
        if data.ndim != 2 or data.shape[0] != data.shape[1]:
            raise DimensionMismatch(f"density matrix must be square, got {data.shape}")
        dim = data.shape[0]
        n = dim.bit_length() - 1
        if 2**n != dim:
            raise DimensionMismatch(f"dimension {dim} is not a power of two")
        if num_qubits is not None and num_qubits != n:
            raise DimensionMismatch(f"dimension {dim} does not hold {num_qubits} qubits")
        self.data = data
        self.num_qubits = n

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    @classmethod
    def zero(cls, n: int) -> "DensityMatrix":
        d = np.zeros((2**n, 2**n), dtype=complex)
        d[0, 0] = 1.0
        return cls(d)

    @classmethod
    def from_statevector(cls, psi) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex).reshape(-1)
        return cls(np.outer(psi, psi.conj()))

    @classmethod
    def basis(cls, bits: str) -> "DensityMatrix":
        """Computational basis state from an MSB-first bitstring."""
        psi = np.zeros(2 ** len(bits), dtype=complex)
        psi[int(bits, 2)] = 1.0
        return cls.from_statevector(psi)

    def tensor(self, other: "DensityMatrix") -> "DensityMatrix":
        """``self`` becomes the more significant block."""
        return DensityMatrix(np.kron(self.data, other.data))

    def probabilities(self) -> np.ndarray:
        return np.clip(np.real(np.diag(self.data)), 0.0, None)

    def probability(self, bits: str) -> float:
        return float(np.real(self.data[int(bits, 2), int(bits, 2)]))

    def fidelity_pure(self, psi) -> float:
        psi = np.asarray(psi, dtype=complex).reshape(-1)
        return float(np.real(psi.conj() @ self.data @ psi))

    def check(self, atol_herm=1e-10, atol_trace=1e-10, atol_eig=1e-9) -> None:
        """Raise AssertionError unless Hermitian, unit trace and PSD."""
        herm = np.max(np.abs(self.data - self.data.conj().T))
        if herm > atol_herm:
            raise AssertionError(f"not Hermitian: {herm:.3e}")
        tr = np.trace(self.data)
        if abs(tr - 1) > atol_trace:
            raise AssertionError(f"trace {tr} != 1")
        mn = np.linalg.eigvalsh(0.5 * (self.data + self.data.conj().T)).min()
        if mn < -atol_eig:
            raise AssertionError(f"negative eigenvalue {mn:.3e}")

    def __repr__(self):
        return f"DensityMatrix(num_qubits={self.num_qubits})"


@dataclass
class ShotResult:
    counts: dict[str, int]
    shots: int
    seed: int
    algorithm: str = "numpy.PCG64"

    def probability(self, key: str) -> float:
        return self.counts.get(key, 0) / self.shots

    def marginal(self, clbits: Sequence[int], num_clbits: int) -> dict[str, int]:
        """Counts over ``clbits`` (listed MSB-first) summed over the rest."""
        out: dict[str, int] = {}
        for key, n in self.counts.items():
            sub = "".join(key[num_clbits - 1 - c] for c in clbits)
            out[sub] = out.get(sub, 0) + n
        return out


# ---------------------------------------------------------------------------
# matrix kernels. A state over m wires is a C-contiguous (2^m, 2^m) array with
# wire 0 as the least significant bit; ancilla wires are appended on top.
# Gates act through reshape-only views that isolate the touched bits.


def _split(m: int, wires: Sequence[int]) -> tuple[list[int], dict[int, int]]:
    """Shape splitting an m-bit index around ``wires``, and each wire's axis."""
    shape: list[int] = []
    axis: dict[int, int] = {}
    hi = m
    for w in sorted(set(wires), reverse=True):
        if hi - 1 - w:
            shape.append(2 ** (hi - 1 - w))
        axis[w] = len(shape)
        shape.append(2)
        hi = w
    if hi:
        shape.append(2**hi)
    return shape, axis


def _apply_op(t: np.ndarray, op: np.ndarray, axes: Sequence[int]) -> np.ndarray:
    """Contract ``op`` (2^k x 2^k, first axis = high bit) into ``axes`` of ``t``.

    Written as slice-wise linear combinations so sparse gates (permutations,
    diagonals) skip their zero entries.
    """
    k = len(axes)
    d = 2**k
    op = np.asarray(op).reshape(d, d)
    index = []
    for j in range(d):
        idx = [slice(None)] * t.ndim
        for pos, ax in enumerate(axes):
            idx[ax] = (j >> (k - 1 - pos)) & 1
        index.append(tuple(idx))
    src = [t[ix] for ix in index]
    out = np.empty_like(t)
    for i in range(d):
        o = out[index[i]]
        terms = [(op[i, j], src[j]) for j in range(d) if op[i, j] != 0]
        if not terms:
            o[...] = 0
            continue
        c, x = terms[0]
        if c == 1:
            o[...] = x
        else:
            np.multiply(x, c, out=o)
        for c, x in terms[1:]:
            if c == 1:
                o += x
            else:
                o += c * x
    return out


def _apply_unitary(rho: np.ndarray, m: int, u: np.ndarray, wires: Sequence[int]) -> np.ndarray:
    D = 2**m
    shape, axis = _split(m, wires)
    ax = [axis[w] for w in wires]
    r = _apply_op(rho.reshape(shape + [D]), u, ax).reshape(D, D)
    return _apply_op(r.reshape([D] + shape), np.conj(u), [a + 1 for a in ax]).reshape(D, D)


def _wire_view(rho: np.ndarray, m: int, w: int) -> np.ndarray:
    """View with axes (high_r, row_bit, low_r, high_c, col_bit, low_c)."""
    return rho.reshape(2 ** (m - 1 - w), 2, 2**w, 2 ** (m - 1 - w), 2, 2**w)


def _dephase(rho: np.ndarray, m: int, w: int) -> np.ndarray:
    out = rho.copy()
    v = _wire_view(out, m, w)
    v[:, 0, :, :, 1, :] = 0
    v[:, 1, :, :, 0, :] = 0
    return out


def _add_wire(rho: np.ndarray) -> np.ndarray:
    """Adjoin a |0><0| wire as the new most significant bit."""
    D = rho.shape[0]
    out = np.zeros((2 * D, 2 * D), dtype=rho.dtype)
    out[:D, :D] = rho
    return out


def _trace_wire(rho: np.ndarray, m: int, w: int) -> np.ndarray:
    v = _wire_view(rho, m, w)
    D = 2 ** (m - 1)
    return (v[:, 0, :, :, 0, :] + v[:, 1, :, :, 1, :]).reshape(D, D)


def _to_tensor(rho: np.ndarray, n: int) -> np.ndarray:
    # reshape puts qubit n-1 on axis 0; reverse so qubit q sits on axis q
    t = rho.reshape((2,) * (2 * n))
    perm = list(range(n - 1, -1, -1)) + list(range(2 * n - 1, n - 1, -1))
    return t.transpose(perm)


class _Register:
    """Dense state over the *active* wires only.

    Wires not in ``active`` are known to be |0> and in product with the rest,
    so they are left out of the matrix. ``active[p]`` is the wire at bit p.
    """

    def __init__(self, rho: np.ndarray, active: list[int]):
        self.rho = rho
        self.active = active

    @property
    def m(self) -> int:
        return len(self.active)

    def is_active(self, w: int) -> bool:
        return w in self.active

    def activate(self, w: int) -> None:
        if w not in self.active:
            self.rho = _add_wire(self.rho)
            self.active.append(w)

    def positions(self, wires: Sequence[int]) -> list[int]:
        for w in wires:
            self.activate(w)
        return [self.active.index(w) for w in wires]

    def unitary(self, u: np.ndarray, wires: Sequence[int]) -> None:
        pos = self.positions(wires)
        self.rho = _apply_unitary(self.rho, self.m, u, pos)

    def kraus(self, ks: Sequence[np.ndarray], w: int) -> None:
        (p,) = self.positions([w])
        D = 2**self.m
        shape, axis = _split(self.m, [p])
        out = np.zeros_like(self.rho)
        for k in ks:
            r = _apply_op(self.rho.reshape(shape + [D]), k, [axis[p]]).reshape(D, D)
            out += _apply_op(r.reshape([D] + shape), np.conj(k), [axis[p] + 1]).reshape(D, D)
        self.rho = out

    def dephase(self, w: int) -> None:
        if w in self.active:
            self.rho = _dephase(self.rho, self.m, self.active.index(w))

    def discard(self, w: int) -> None:
        """Trace ``w`` out and park it in |0>; this is exactly Reset."""
        if w in self.active:
            p = self.active.index(w)
            self.rho = _trace_wire(self.rho, self.m, p)
            del self.active[p]

    def canonical(self, n: int) -> np.ndarray:
        """Matrix over wires 0..n-1 in natural order, scratch wires traced out."""
        for w in [w for w in self.active if w >= n]:
            self.discard(w)
        for q in range(n):
            self.activate(q)
        m = self.m
        t = self.rho.reshape((2,) * (2 * m))
        rows = [m - 1 - self.active.index(q) for q in range(n - 1, -1, -1)]
        perm = rows + [m + r for r in rows]
        D = 2**n
        self.rho = np.ascontiguousarray(t.transpose(perm)).reshape(D, D)
        self.active = list(range(n))
        return self.rho


def _plan_ancillas(instrs: Sequence[Instruction]) -> tuple[dict[int, int], set[int]]:
    """Last read index per clbit, and the Measure indices whose bit must be copied."""
    last_read: dict[int, int] = {}
    for i, ins in enumerate(instrs):
        if isinstance(ins, Conditional):
            last_read[ins.clbit] = i
    needs_copy = set()
    for i, ins in enumerate(instrs):
        if isinstance(ins, Measure) and ins.clbit in last_read:
            end = last_read[ins.clbit]
            if any(ins.qubit in instruction_qubits(instrs[j]) for j in range(i + 1, end + 1)):
                needs_copy.add(i)
    return last_read, needs_copy


def _fused_kraus(g: Gate, parked: int) -> tuple[int, list[np.ndarray]]:
    """Kraus set on the partner qubit of ``g`` when ``parked`` enters in |0> and is then reset."""
    u = g.matrix.reshape(2, 2, 2, 2)  # (out0, out1, in0, in1)
    if g.qubits[1] == parked:
        return g.qubits[0], [np.ascontiguousarray(u[:, j, :, 0]) for j in (0, 1)]
    return g.qubits[1], [np.ascontiguousarray(u[j, :, 0, :]) for j in (0, 1)]


def evolve_exact(
    circuit: Circuit,
    initial: DensityMatrix | None = None,
    callback: Callable[[int, DensityMatrix], None] | None = None,
) -> DensityMatrix:
    """Evolve ``initial`` (default |0...0>) through ``circuit`` exactly.

    Measurement outcomes are averaged over, so the result equals enumerating
    every branch, applying its classically conditioned corrections and mixing
    by probability.

    Args:
        circuit: circuit to run.
        initial: starting state on ``circuit.num_qubits`` qubits.
        callback: called as ``callback(index, state)`` after every instruction
            with the state on the circuit's qubits. Meant for tests; a gate
            on a fresh wire followed by that wire's Reset is applied as one
            channel, so both indices report the post-Reset state.
    """
    n = circuit.num_qubits
    if initial is not None and initial.num_qubits != n:
        raise DimensionMismatch(f"initial state has {initial.num_qubits} qubits, circuit has {n}")
    if n > MAX_QUBITS:
        raise DimensionMismatch(f"{n} qubits exceeds the dense ceiling of {MAX_QUBITS}")

    if initial is None:
        reg = _Register(np.ones((1, 1), dtype=complex), [])
    else:
        reg = _Register(np.ascontiguousarray(initial.data, dtype=complex), list(range(n)))

    instrs = circuit.instructions
    last_read, needs_copy = _plan_ancillas(instrs)
    carrier: dict[int, int | None] = {}  # clbit -> wire holding it; None = constant 0
    next_scratch = n

    def snapshot():
        tmp = _Register(reg.rho.copy(), list(reg.active))
        return DensityMatrix(tmp.canonical(n))

    skip = -1
    for i, ins in enumerate(instrs):
        if i == skip:
            if callback is not None:
                callback(i, snapshot())
            continue
        if isinstance(ins, Gate):
            nxt = instrs[i + 1] if i + 1 < len(instrs) else None
            parked = [q for q in ins.qubits if not reg.is_active(q)]
            if (ins.arity == 2 and len(parked) == 1 and isinstance(nxt, Reset)
                    and nxt.qubit == parked[0]):
                partner, ks = _fused_kraus(ins, parked[0])
                reg.kraus(ks, partner)
                skip = i + 1
            else:
                reg.unitary(ins.matrix, ins.qubits)
        elif isinstance(ins, Measure):
            if not reg.is_active(ins.qubit):
                carrier[ins.clbit] = None
            else:
                reg.dephase(ins.qubit)
                if i in needs_copy:
                    w = next_scratch
                    next_scratch += 1
                    reg.unitary(controlled(_PAULI["X"]), (ins.qubit, w))
                    carrier[ins.clbit] = w
                else:
                    carrier[ins.clbit] = ins.qubit
        elif isinstance(ins, Reset):
            reg.discard(ins.qubit)
        elif isinstance(ins, Conditional):
            w = carrier[ins.clbit]
            if w is not None:
                g = ins.gate
                cu = np.eye(2 ** (g.arity + 1), dtype=complex)
                cu[2**g.arity :, 2**g.arity :] = g.matrix
                reg.unitary(cu, (w,) + g.qubits)
                if last_read[ins.clbit] == i and w >= n:
                    reg.discard(w)
        if callback is not None:
            callback(i, snapshot())

    return DensityMatrix(reg.canonical(n))


def apply_gate(state: DensityMatrix, gate: Gate) -> DensityMatrix:
    return DensityMatrix(_apply_unitary(state.data, state.num_qubits, gate.matrix, gate.qubits))


def partial_trace(state: DensityMatrix, keep: Iterable[int]) -> DensityMatrix:
    """Reduced state on ``keep``; kept qubits retain their relative order."""
    keep = sorted(set(int(q) for q in keep))
    n = state.num_qubits
    if not keep:
        raise EmptyKeepSet("keep set is empty")
    if keep[0] < 0 or keep[-1] >= n:
        raise DimensionMismatch(f"keep {keep} outside {n}-qubit register")
    return reduced(state, keep[::-1])


def reduced(state: DensityMatrix, qubits: Sequence[int]) -> DensityMatrix:
    """Reduced state on ``qubits`` listed most-significant first.

    ``reduced(rho, [a, b])`` puts qubit ``a`` on the high bit of the result,
    which also permutes when the list is not in descending order.
    """
    n = state.num_qubits
    qubits = [int(q) for q in qubits]
    if not qubits:
        raise EmptyKeepSet("keep set is empty")
    if len(set(qubits)) != len(qubits) or min(qubits) < 0 or max(qubits) >= n:
        raise DimensionMismatch(f"bad qubit list {qubits} for {n}-qubit register")
    t = _to_tensor(state.data, n)
    letters = [chr(ord("a") + i) for i in range(2 * n)]
    rows, cols = letters[:n], letters[n:]
    for q in range(n):
        if q not in qubits:
            cols[q] = rows[q]
    out_rows = "".join(rows[q] for q in qubits)
    out_cols = "".join(cols[q] for q in qubits)
    r = np.einsum(f"{''.join(rows)}{''.join(cols)}->{out_rows}{out_cols}", t)
    k = len(qubits)
    return DensityMatrix(r.reshape(2**k, 2**k))


def pauli_matrix(pauli: str) -> np.ndarray:
    out = np.array([[1.0 + 0j]])
    for ch in pauli:
        out = np.kron(out, _PAULI[ch])
    return out


def expectation(state: DensityMatrix, pauli: str) -> float:
    """Tr(rho P) for an MSB-first Pauli string such as ``"ZI"``."""
    if len(pauli) != state.num_qubits or any(ch not in _PAULI for ch in pauli):
        raise BadPauliString(f"{pauli!r} is not a {state.num_qubits}-letter string over IXYZ")
    return float(np.real(np.trace(state.data @ pauli_matrix(pauli))))


def apply_kraus(state: DensityMatrix, qubit: int, kraus: Sequence[np.ndarray]) -> DensityMatrix:
    ks = [np.asarray(k, dtype=complex) for k in kraus]
    if not ks or any(k.shape != (2, 2) for k in ks):
        raise NonTracePreservingSet("need a non-empty list of 2x2 Kraus operators")
    total = sum(k.conj().T @ k for k in ks)
    if np.max(np.abs(total - np.eye(2))) > 1e-10:
        raise NonTracePreservingSet("sum of K^dagger K differs from identity")
    n = state.num_qubits
    if not 0 <= qubit < n:
        raise DimensionMismatch(f"qubit {qubit} outside {n}-qubit register")
    D = 2**n
    shape, axis = _split(n, [qubit])
    out = np.zeros_like(state.data)
    for k in ks:
        r = _apply_op(state.data.reshape(shape + [D]), k, [axis[qubit]]).reshape(D, D)
        out += _apply_op(r.reshape([D] + shape), k.conj(), [axis[qubit] + 1]).reshape(D, D)
    return DensityMatrix(out)


# ---------------------------------------------------------------------------
# shot sampling: batched statevector trajectories with true mid-circuit collapse

_BATCH_AMPLITUDES = 1 << 22


def _sv_apply(psi: np.ndarray, u: np.ndarray, qubits: Sequence[int], n: int) -> np.ndarray:
    # psi: (batch, 2, ..., 2) with qubit q on axis 1 + (n - 1 - q)
    shape, axis = _split(n, qubits)
    b = psi.shape[0]
    out = _apply_op(psi.reshape([b] + shape), u, [axis[q] + 1 for q in qubits])
    return out.reshape(psi.shape)


def _sv_collapse(psi, q, n, rng):
    ax = 1 + n - 1 - q
    one = np.take(psi, 1, axis=ax)
    p1 = np.sum(np.abs(one.reshape(one.shape[0], -1)) ** 2, axis=1)
    outcome = rng.random(psi.shape[0]) < p1
    keep = np.where(outcome, np.sqrt(np.maximum(p1, 1e-300)), np.sqrt(np.maximum(1 - p1, 1e-300)))
    mask_shape = [psi.shape[0]] + [1] * n
    sel = np.zeros((psi.shape[0], 2))
    sel[np.arange(psi.shape[0]), outcome.astype(int)] = 1.0
    shape = [1] * (n + 1)
    shape[0], shape[ax] = psi.shape[0], 2
    psi = psi * sel.reshape(shape) / keep.reshape(mask_shape)
    return psi, outcome


def _run_batch(circuit: Circuit, batch: int, rng) -> np.ndarray:
    n = circuit.num_qubits
    psi = np.zeros((batch,) + (2,) * n, dtype=complex)
    psi[(slice(None),) + (0,) * n] = 1.0
    bits = np.zeros((batch, circuit.num_clbits), dtype=bool)
    x = _PAULI["X"]
    for ins in circuit:
        if isinstance(ins, Gate):
            psi = _sv_apply(psi, ins.matrix, ins.qubits, n)
        elif isinstance(ins, Measure):
            psi, out = _sv_collapse(psi, ins.qubit, n, rng)
            bits[:, ins.clbit] = out
        elif isinstance(ins, Reset):
            psi, out = _sv_collapse(psi, ins.qubit, n, rng)
            if out.any():
                psi[out] = _sv_apply(psi[out], x, (ins.qubit,), n)
        elif isinstance(ins, Conditional):
            sel = bits[:, ins.clbit]
            if sel.any():
                psi[sel] = _sv_apply(psi[sel], ins.gate.matrix, ins.gate.qubits, n)
    return bits


def sample_shots(circuit: Circuit, shots: int, seed: int) -> ShotResult:
    """Sample ``shots`` runs of ``circuit`` from |0...0> with PCG64(seed).

    Keys of ``counts`` are the full classical register, bit ``num_clbits-1``
    first.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    n = circuit.num_qubits
    if n > MAX_QUBITS:
        raise DimensionMismatch(f"{n} qubits exceeds the dense ceiling of {MAX_QUBITS}")
    rng = np.random.default_rng(seed)
    per_batch = max(1, _BATCH_AMPLITUDES >> n)
    counts: dict[str, int] = {}
    done = 0
    nc = circuit.num_clbits
    weights = 1 << np.arange(nc, dtype=np.int64)
    while done < shots:
        b = min(per_batch, shots - done)
        bits = _run_batch(circuit, b, rng)
        values = bits.astype(np.int64) @ weights if nc else np.zeros(b, dtype=np.int64)
        uniq, cnt = np.unique(values, return_counts=True)
        for v, c in zip(uniq, cnt):
            key = format(int(v), f"0{nc}b") if nc else ""
            counts[key] = counts.get(key, 0) + int(c)
        done += b
    return ShotResult(dict(sorted(counts.items())), shots, seed)
