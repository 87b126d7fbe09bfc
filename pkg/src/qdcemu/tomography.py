"""Pauli state tomography by linear inversion, and Uhlmann fidelity."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .circuit import H, SDG
from .engine import DensityMatrix, pauli_matrix
from .errors import DimensionMismatch, IncompleteData, TooManyQubits

MAX_TOMOGRAPHY_QUBITS = 5
EXACT = "exact_expectations"
SHOTS = "shots"

# rotation taking each measurement basis onto Z
_ROTATION = {"X": H, "Y": H @ SDG, "Z": np.eye(2, dtype=complex)}


@dataclass(frozen=True)
class TomographySetting:
    basis: str  # MSB-first, one letter per measured qubit


@dataclass
class SettingData:
    """Outcome data for one setting: raw counts or exact Pauli expectations."""

    basis: str
    counts: dict[str, int] | None = None
    expectations: dict[str, float] | None = None

    def to_dict(self) -> dict:
        d = {"basis": self.basis}
        if self.counts is not None:
            d["counts"] = dict(self.counts)
        if self.expectations is not None:
            d["expectations"] = dict(self.expectations)
        return d


@dataclass
class TomographyResult:
    rho_hat: DensityMatrix
    mode: str
    settings_used: int
    shots: int | None = None
    seed: int | None = None
    raw: DensityMatrix | None = field(default=None, repr=False)


def tomography_settings(k: int) -> list[TomographySetting]:
    """All 3^k measurement bases in lexicographic order (XX..X first)."""
    if not 1 <= k <= MAX_TOMOGRAPHY_QUBITS:
        raise TooManyQubits(f"tomography supports 1..{MAX_TOMOGRAPHY_QUBITS} qubits, got {k}")
    return [TomographySetting("".join(p)) for p in itertools.product("XYZ", repeat=k)]


def basis_probabilities(rho: DensityMatrix, basis: str) -> np.ndarray:
    """Outcome distribution when each qubit is measured in the given basis."""
    if len(basis) != rho.num_qubits:
        raise DimensionMismatch(f"basis {basis!r} does not match {rho.num_qubits} qubits")
    u = np.array([[1.0 + 0j]])
    for ch in basis:
        u = np.kron(u, _ROTATION[ch])
    p = np.real(np.einsum("ij,jk,ik->i", u, rho.data, u.conj()))
    return np.clip(p, 0.0, None)


def _parity_signs(k: int) -> np.ndarray:
    """signs[s, b] = (-1)^{popcount(s & b)} for subset mask s and outcome b."""
    idx = np.arange(2**k)
    bits = np.bitwise_and.outer(idx, idx)
    pop = np.zeros_like(bits)
    for j in range(k):
        pop += (bits >> j) & 1
    return 1 - 2 * (pop & 1)


def _subset_pauli(basis: str, mask: int) -> str:
    k = len(basis)
    return "".join(basis[i] if (mask >> (k - 1 - i)) & 1 else "I" for i in range(k))


def expectations_from_distribution(basis: str, probs: np.ndarray) -> dict[str, float]:
    """Every Pauli obtainable from one setting, identity positions marginalized."""
    k = len(basis)
    vals = _parity_signs(k) @ np.asarray(probs, dtype=float)
    return {_subset_pauli(basis, s): float(vals[s]) for s in range(2**k)}


def _counts_vector(counts: Mapping[str, int], k: int) -> np.ndarray:
    v = np.zeros(2**k)
    for key, c in counts.items():
        v[int(key, 2)] += c
    total = v.sum()
    if total <= 0:
        raise IncompleteData("setting has no shots")
    return v / total


def measure_settings(rho: DensityMatrix, shots: int | None = None, seed: int | None = None) -> list[SettingData]:
    """Data for every setting on ``rho``.

    With ``shots=None`` the exact expectations are recorded; otherwise each
    setting draws ``shots`` multinomial samples from its exact outcome
    distribution, identical in law to measuring the prepared state.
    """
    k = rho.num_qubits
    rng = np.random.default_rng(seed) if shots is not None else None
    out = []
    for st in tomography_settings(k):
        p = basis_probabilities(rho, st.basis)
        if shots is None:
            out.append(SettingData(st.basis, expectations=expectations_from_distribution(st.basis, p)))
        else:
            draws = rng.multinomial(shots, p / p.sum())
            counts = {format(b, f"0{k}b"): int(c) for b, c in enumerate(draws) if c}
            out.append(SettingData(st.basis, counts=counts))
    return out


def project_psd(m: np.ndarray) -> np.ndarray:
    """Clip negative eigenvalues and renormalize the trace to one."""
    m = 0.5 * (m + m.conj().T)
    w, v = np.linalg.eigh(m)
    w = np.clip(w, 0.0, None)
    if w.sum() <= 0:
        raise IncompleteData("reconstruction has no positive spectrum")
    w = w / w.sum()
    return (v * w) @ v.conj().T


def reconstruct(data: Sequence[SettingData], k: int) -> TomographyResult:
    """Linear inversion over all 4^k Pauli strings, then PSD projection.

    Each Pauli's expectation is averaged over every setting that measures it.
    """
    bases = {d.basis for d in data}
    missing = [s.basis for s in tomography_settings(k) if s.basis not in bases]
    if missing:
        raise IncompleteData(f"missing {len(missing)} settings, e.g. {missing[0]}")
    sums: dict[str, float] = {}
    hits: dict[str, int] = {}
    mode = EXACT
    for d in data:
        if d.expectations is not None:
            ex = d.expectations
        elif d.counts is not None:
            mode = SHOTS
            ex = expectations_from_distribution(d.basis, _counts_vector(d.counts, k))
        else:
            raise IncompleteData(f"setting {d.basis} carries no data")
        for p, v in ex.items():
            sums[p] = sums.get(p, 0.0) + v
            hits[p] = hits.get(p, 0) + 1
    raw = np.zeros((2**k, 2**k), dtype=complex)
    for letters in itertools.product("IXYZ", repeat=k):
        p = "".join(letters)
        if p not in hits:
            raise IncompleteData(f"no setting measures {p}")
        raw += (sums[p] / hits[p]) * pauli_matrix(p)
    raw /= 2**k
    rho_hat = DensityMatrix(project_psd(raw))
    return TomographyResult(rho_hat, mode, len(data), raw=DensityMatrix(raw))


def run_tomography(rho: DensityMatrix, shots: int | None = None, seed: int | None = None) -> TomographyResult:
    data = measure_settings(rho, shots, seed)
    res = reconstruct(data, rho.num_qubits)
    res.shots, res.seed = shots, seed
    return res


def _factor(m: np.ndarray, tol: float = 1e-14) -> np.ndarray:
    """A with m = A A^dagger, keeping only the numerically nonzero spectrum."""
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    keep = w > tol * max(w.max(), 1.0)
    return v[:, keep] * np.sqrt(w[keep])


def fidelity(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.

    With rho = A A^dagger, sqrt(rho) sigma sqrt(rho) has the same nonzero
    spectrum as A^dagger sigma A, so only the support of the lower-rank state
    enters. For a pure state this is exactly <psi|sigma|psi>.
    """
    if rho.dim != sigma.dim:
        raise DimensionMismatch(f"dimensions differ: {rho.dim} vs {sigma.dim}")
    a, b = _factor(rho.data), _factor(sigma.data)
    if b.shape[1] < a.shape[1]:
        a, sigma = b, rho
    inner = a.conj().T @ sigma.data @ a
    w = np.linalg.eigvalsh(0.5 * (inner + inner.conj().T))
    return float(np.sum(np.sqrt(np.clip(w, 0.0, None))) ** 2)


def dump(data: Sequence[SettingData], k: int, mode: str, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump({"settings": [d.to_dict() for d in data], "k": k, "mode": mode}, fh, indent=1)


def load(path: str | Path) -> tuple[list[SettingData], int, str]:
    with open(path) as fh:
        blob = json.load(fh)
    data = [SettingData(d["basis"], d.get("counts"), d.get("expectations")) for d in blob["settings"]]
    return data, blob["k"], blob["mode"]
