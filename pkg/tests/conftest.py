"""Shared reference implementations used as test oracles.

Everything here is deliberately naive (full 2^n x 2^n matrices built with
explicit loops, explicit branch bookkeeping) so it shares no code paths with
the engine under test.
"""

import itertools

import numpy as np
import pytest

from qdcemu.circuit import Barrier, Conditional, Gate, Measure, Reset


def embed(u, qubits, n):
    """Full operator of ``u`` acting on ``qubits`` (first = high factor), qubit 0 = LSB."""
    u = np.asarray(u, dtype=complex)
    k = len(qubits)
    D = 2**n
    full = np.zeros((D, D), dtype=complex)
    for col in range(D):
        local_in = 0
        for q in qubits:
            local_in = (local_in << 1) | ((col >> q) & 1)
        for local_out in range(2**k):
            amp = u[local_out, local_in]
            if amp == 0:
                continue
            row = col
            for pos, q in enumerate(qubits):
                bit = (local_out >> (k - 1 - pos)) & 1
                row = (row & ~(1 << q)) | (bit << q)
            full[row, col] += amp
    return full


def projector(q, value, n):
    D = 2**n
    return np.diag([1.0 if ((i >> q) & 1) == value else 0.0 for i in range(D)]).astype(complex)


def lower(q, n):
    """|0><1| on qubit q."""
    return embed(np.array([[0, 1], [0, 0]]), (q,), n)


def reference_evolve(circuit, rho0=None):
    """Branch enumeration: a list of (unnormalized rho, classical bits) mixed at the end."""
    n = circuit.num_qubits
    D = 2**n
    if rho0 is None:
        rho0 = np.zeros((D, D), dtype=complex)
        rho0[0, 0] = 1
    branches = [(np.array(rho0, dtype=complex), {})]
    for ins in circuit:
        nxt = []
        for rho, bits in branches:
            if isinstance(ins, Gate):
                U = embed(ins.matrix, ins.qubits, n)
                nxt.append((U @ rho @ U.conj().T, bits))
            elif isinstance(ins, Measure):
                for v in (0, 1):
                    P = projector(ins.qubit, v, n)
                    r = P @ rho @ P
                    if np.real(np.trace(r)) > 1e-15:
                        nxt.append((r, {**bits, ins.clbit: v}))
            elif isinstance(ins, Reset):
                P0 = projector(ins.qubit, 0, n)
                L = lower(ins.qubit, n)
                nxt.append((P0 @ rho @ P0 + L @ rho @ L.conj().T, bits))
            elif isinstance(ins, Conditional):
                if bits.get(ins.clbit, 0) == 1:
                    U = embed(ins.gate.matrix, ins.gate.qubits, n)
                    rho = U @ rho @ U.conj().T
                nxt.append((rho, bits))
            elif isinstance(ins, Barrier):
                nxt.append((rho, bits))
        branches = nxt
    return sum(r for r, _ in branches)


def reference_outcomes(circuit):
    """Exact distribution of the full classical register (keys MSB-first)."""
    n, nc = circuit.num_qubits, circuit.num_clbits
    D = 2**n
    rho0 = np.zeros((D, D), dtype=complex)
    rho0[0, 0] = 1
    branches = [(rho0, {})]
    for ins in circuit:
        nxt = []
        for rho, bits in branches:
            if isinstance(ins, Measure):
                for v in (0, 1):
                    P = projector(ins.qubit, v, n)
                    r = P @ rho @ P
                    if np.real(np.trace(r)) > 1e-15:
                        nxt.append((r, {**bits, ins.clbit: v}))
                continue
            if isinstance(ins, Gate):
                U = embed(ins.matrix, ins.qubits, n)
                rho = U @ rho @ U.conj().T
            elif isinstance(ins, Reset):
                P0 = projector(ins.qubit, 0, n)
                L = lower(ins.qubit, n)
                rho = P0 @ rho @ P0 + L @ rho @ L.conj().T
            elif isinstance(ins, Conditional) and bits.get(ins.clbit, 0) == 1:
                U = embed(ins.gate.matrix, ins.gate.qubits, n)
                rho = U @ rho @ U.conj().T
            nxt.append((rho, bits))
        branches = nxt
    dist = {}
    for rho, bits in branches:
        key = "".join(str(bits.get(c, 0)) for c in reversed(range(nc)))
        dist[key] = dist.get(key, 0.0) + float(np.real(np.trace(rho)))
    return dist


def random_unitary(d, rng):
    z = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_pure(d, rng):
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


def random_density(d, rng, rank=None):
    rank = rank or d
    a = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    m = a @ a.conj().T
    return m / np.trace(m)


def choi_from_kraus(kraus):
    d = kraus[0].shape[1]
    out = np.zeros((d * d, d * d), dtype=complex)
    for i, j in itertools.product(range(d), repeat=2):
        e = np.zeros((d, d), dtype=complex)
        e[i, j] = 1
        out += np.kron(e, sum(k @ e @ k.conj().T for k in kraus))
    return out


def choi_from_map(channel, d):
    """Choi matrix sum_ij |i><j| (x) E(|i><j|) of a linear map given as a function."""
    out = np.zeros((d * d, d * d), dtype=complex)
    for i, j in itertools.product(range(d), repeat=2):
        e = np.zeros((d, d), dtype=complex)
        e[i, j] = 1
        out += np.kron(e, channel(e))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
